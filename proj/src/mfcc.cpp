#include "asdnb/mfcc.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "asdnb/errors.hpp"
#include "asdnb/types.hpp"

namespace asdnb {

namespace {

constexpr int kFftSize = 512;
constexpr int kSpectrumBins = kFftSize / 2 + 1;
constexpr int kMelFilters = 26;
constexpr Real kPreEmphasis = 0.97;
constexpr Real kLogFloor = 1e-10;

Real hz_to_mel(Real hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
Real mel_to_hz(Real mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct Tables {
    std::array<Real, kMfccWindowSamples> window;        // Hamming
    std::vector<std::complex<Real>> twiddle;            // FFT roots
    std::array<int, kFftSize> bitrev;
    // Triangular mel filters, stored dense [filter][bin].
    std::vector<std::array<Real, kSpectrumBins>> fbank;
    // Orthonormal DCT-II, [coeff][filter].
    std::array<std::array<Real, kMelFilters>, kMfccCoeffs> dct;

    Tables() {
        for (int n = 0; n < kMfccWindowSamples; ++n)
            window[static_cast<std::size_t>(n)] =
                0.54 - 0.46 * std::cos(2.0 * M_PI * n / (kMfccWindowSamples - 1));

        twiddle.resize(kFftSize / 2);
        for (int k = 0; k < kFftSize / 2; ++k)
            twiddle[static_cast<std::size_t>(k)] =
                std::polar<Real>(1.0, -2.0 * M_PI * k / kFftSize);
        for (int i = 0; i < kFftSize; ++i) {
            int r = 0;
            for (int b = 0; b < 9; ++b) r |= ((i >> b) & 1) << (8 - b);
            bitrev[static_cast<std::size_t>(i)] = r;
        }

        fbank.assign(kMelFilters, {});
        const Real mel_low = hz_to_mel(0.0);
        const Real mel_high = hz_to_mel(kSampleRate / 2.0);
        std::array<int, kMelFilters + 2> bin;
        for (int j = 0; j < kMelFilters + 2; ++j) {
            const Real mel = mel_low + (mel_high - mel_low) * j / (kMelFilters + 1);
            bin[static_cast<std::size_t>(j)] = static_cast<int>(
                std::floor((kFftSize + 1) * mel_to_hz(mel) / kSampleRate));
        }
        for (int j = 0; j < kMelFilters; ++j) {
            const int lo = bin[static_cast<std::size_t>(j)];
            const int mid = bin[static_cast<std::size_t>(j + 1)];
            const int hi = bin[static_cast<std::size_t>(j + 2)];
            for (int i = lo; i < mid; ++i)
                fbank[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
                    static_cast<Real>(i - lo) / std::max(1, mid - lo);
            for (int i = mid; i < hi; ++i)
                fbank[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
                    static_cast<Real>(hi - i) / std::max(1, hi - mid);
        }

        for (int i = 0; i < kMfccCoeffs; ++i) {
            const Real scale = std::sqrt((i == 0 ? 1.0 : 2.0) / kMelFilters);
            for (int j = 0; j < kMelFilters; ++j)
                dct[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                    scale * std::cos(M_PI * i * (2 * j + 1) / (2.0 * kMelFilters));
        }
    }
};

const Tables& tables() {
    static const Tables t;
    return t;
}

// In-place iterative radix-2 FFT, length 512.
void fft512(std::complex<Real>* a) {
    const Tables& tb = tables();
    for (int i = 0; i < kFftSize; ++i) {
        const int j = tb.bitrev[static_cast<std::size_t>(i)];
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= kFftSize; len <<= 1) {
        const int step = kFftSize / len;
        for (int start = 0; start < kFftSize; start += len) {
            for (int k = 0; k < len / 2; ++k) {
                const std::complex<Real> w = tb.twiddle[static_cast<std::size_t>(k * step)];
                const std::complex<Real> u = a[start + k];
                const std::complex<Real> v = a[start + k + len / 2] * w;
                a[start + k] = u + v;
                a[start + k + len / 2] = u - v;
            }
        }
    }
}

}  // namespace

MFCCMatrix compute_mfcc(const std::vector<Real>& waveform, int sample_rate) {
    if (sample_rate != kSampleRate)
        throw BadSampleRate(std::to_string(sample_rate) + " Hz; only 16000 Hz is supported (no resampler)");
    const std::int64_t num_samples = static_cast<std::int64_t>(waveform.size());
    if (num_samples < kMfccWindowSamples)
        throw TooShort(std::to_string(num_samples) + " samples; need at least " +
                       std::to_string(kMfccWindowSamples));

    const Tables& tb = tables();
    const std::int64_t n_frames = mfcc_frame_count(num_samples);

    // Pre-emphasis over the whole signal; first sample passes through.
    std::vector<Real> emphasized(waveform.size());
    emphasized[0] = waveform[0];
    for (std::size_t i = 1; i < waveform.size(); ++i)
        emphasized[i] = waveform[i] - kPreEmphasis * waveform[i - 1];

    MFCCMatrix out;
    out.frames = Tensor({n_frames, kMfccCoeffs});

    std::array<std::complex<Real>, kFftSize> buf;
    std::array<Real, kSpectrumBins> power;
    std::array<Real, kMelFilters> logmel;
    for (std::int64_t f = 0; f < n_frames; ++f) {
        const Real* src = emphasized.data() + f * kMfccHopSamples;
        for (int n = 0; n < kMfccWindowSamples; ++n)
            buf[static_cast<std::size_t>(n)] = src[n] * tb.window[static_cast<std::size_t>(n)];
        for (int n = kMfccWindowSamples; n < kFftSize; ++n) buf[static_cast<std::size_t>(n)] = 0;
        fft512(buf.data());
        for (int k = 0; k < kSpectrumBins; ++k)
            power[static_cast<std::size_t>(k)] = std::norm(buf[static_cast<std::size_t>(k)]) / kFftSize;

        for (int j = 0; j < kMelFilters; ++j) {
            Real e = 0;
            const auto& filt = tb.fbank[static_cast<std::size_t>(j)];
            for (int k = 0; k < kSpectrumBins; ++k) e += filt[static_cast<std::size_t>(k)] * power[static_cast<std::size_t>(k)];
            logmel[static_cast<std::size_t>(j)] = std::log(std::max(e, kLogFloor));
        }
        Real* row = out.frames.data() + f * kMfccCoeffs;
        for (int i = 0; i < kMfccCoeffs; ++i) {
            Real c = 0;
            for (int j = 0; j < kMelFilters; ++j)
                c += tb.dct[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * logmel[static_cast<std::size_t>(j)];
            row[i] = c;
        }
    }
    return out;
}

Tensor align_audio_to_video(const MFCCMatrix& mfcc, std::int64_t video_frames, Real fps) {
    if (!mfcc.frames.defined() || mfcc.frames.dim(0) == 0) throw EmptyInput("MFCC matrix has no rows");
    if (video_frames < 1) throw EmptyInput("video frame count must be >= 1");
    if (!(fps > 0)) throw EmptyInput("fps must be positive");

    const std::int64_t n = mfcc.frames.dim(0);
    const std::int64_t target = kAudioPerVideoFrame * video_frames;
    if (n == target) return mfcc.frames;

    Tensor out({target, kMfccCoeffs});
    const Real* src = mfcc.frames.data();
    for (std::int64_t r = 0; r < target; ++r) {
        const Real pos = target == 1 ? 0.0
                                     : static_cast<Real>(r) * static_cast<Real>(n - 1) /
                                           static_cast<Real>(target - 1);
        const std::int64_t i0 = std::min<std::int64_t>(static_cast<std::int64_t>(pos), n - 1);
        const std::int64_t i1 = std::min<std::int64_t>(i0 + 1, n - 1);
        const Real frac = pos - static_cast<Real>(i0);
        Real* dst = out.data() + r * kMfccCoeffs;
        const Real* a = src + i0 * kMfccCoeffs;
        const Real* b = src + i1 * kMfccCoeffs;
        for (int c = 0; c < kMfccCoeffs; ++c) dst[c] = (1.0 - frac) * a[c] + frac * b[c];
    }
    return out;
}

void write_mfcc_dump(const MFCCMatrix& mfcc, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    const std::uint32_t rows = static_cast<std::uint32_t>(mfcc.num_frames());
    const std::uint32_t cols = kMfccCoeffs;
    const std::uint32_t version = 1;
    f.write("MFCC", 4);
    f.write(reinterpret_cast<const char*>(&rows), 4);
    f.write(reinterpret_cast<const char*>(&cols), 4);
    f.write(reinterpret_cast<const char*>(&version), 4);
    std::vector<float> payload(static_cast<std::size_t>(mfcc.frames.numel()));
    for (std::int64_t i = 0; i < mfcc.frames.numel(); ++i)
        payload[static_cast<std::size_t>(i)] = static_cast<float>(mfcc.frames[i]);
    f.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!f) throw IoError("short write to '" + path + "'");
}

MFCCMatrix read_mfcc_dump(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");
    char magic[4];
    std::uint32_t rows = 0, cols = 0, version = 0;
    f.read(magic, 4);
    f.read(reinterpret_cast<char*>(&rows), 4);
    f.read(reinterpret_cast<char*>(&cols), 4);
    f.read(reinterpret_cast<char*>(&version), 4);
    if (!f || std::memcmp(magic, "MFCC", 4) != 0) throw IoError("'" + path + "' is not an MFCC dump");
    if (cols != kMfccCoeffs || version != 1)
        throw IoError("unsupported MFCC dump layout in '" + path + "'");
    MFCCMatrix out;
    out.frames = Tensor({static_cast<std::int64_t>(rows), kMfccCoeffs});
    std::vector<float> payload(static_cast<std::size_t>(rows) * kMfccCoeffs);
    f.read(reinterpret_cast<char*>(payload.data()),
           static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!f) throw IoError("truncated MFCC dump '" + path + "'");
    for (std::size_t i = 0; i < payload.size(); ++i)
        out.frames[static_cast<std::int64_t>(i)] = static_cast<Real>(payload[i]);
    return out;
}

}  // namespace asdnb
