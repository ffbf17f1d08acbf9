#pragma once

#include <string>
#include <vector>

#include "asdnb/common.hpp"
#include "asdnb/tensor.hpp"

namespace asdnb {

inline constexpr int kMfccCoeffs = 13;
inline constexpr int kMfccWindowSamples = 400;  // 25 ms at 16 kHz
inline constexpr int kMfccHopSamples = 160;     // 10 ms at 16 kHz

// N x 13 cepstral features at 100 frames/s.
struct MFCCMatrix {
    Tensor frames;  // [N, 13]
    Real hop_seconds = 0.010;
    Real window_seconds = 0.025;
    int sample_rate = 16000;

    std::int64_t num_frames() const { return frames.defined() ? frames.dim(0) : 0; }
};

// Expected frame count for a waveform of `num_samples` samples.
inline std::int64_t mfcc_frame_count(std::int64_t num_samples) {
    return (num_samples - kMfccWindowSamples) / kMfccHopSamples + 1;
}

// Standard chain: pre-emphasis 0.97, Hamming window, 512-point power
// spectrum, 26 mel filters over [0, 8000] Hz, log floored at 1e-10,
// orthonormal DCT-II keeping 13 coefficients.
// Throws TooShort (< 400 samples) and BadSampleRate (!= 16 kHz; no resampler).
MFCCMatrix compute_mfcc(const std::vector<Real>& waveform, int sample_rate);

// Resamples the frame-index axis onto a 4T-row grid (endpoint-matched linear
// interpolation); returns the input unchanged when it already has 4T rows.
// Throws EmptyInput.
Tensor align_audio_to_video(const MFCCMatrix& mfcc, std::int64_t video_frames, Real fps);

// Binary dump: 16-byte header (magic "MFCC", u32 rows, u32 cols, u32
// version=1), then row-major float32 little-endian payload.
void write_mfcc_dump(const MFCCMatrix& mfcc, const std::string& path);
MFCCMatrix read_mfcc_dump(const std::string& path);

}  // namespace asdnb
