#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "asdnb/common.hpp"
#include "asdnb/tensor.hpp"

namespace asdnb {

inline constexpr int kFrameSize = 112;        // face/body crops are 112x112
inline constexpr int kSampleRate = 16000;     // audio sample rate, Hz
inline constexpr int kEmbedDim = 128;
inline constexpr int kAudioPerVideoFrame = 4; // 100 MFCC rows/s vs 25 fps

// One candidate track: aligned face crops, body crops, audio and per-frame
// speaking labels. Immutable value object; validated at module boundaries.
struct ClipSample {
    std::vector<Tensor> face_frames;  // each [1, 112, 112], values in [0,1]
    std::vector<Tensor> body_frames;  // each [1, 112, 112]
    std::vector<Real> waveform;       // 16 kHz mono
    std::vector<int> labels;          // 0/1 per frame
    std::string track_id;
    Real fps = 25.0;

    int num_frames() const { return static_cast<int>(face_frames.size()); }
};

enum class Modality { visual, audio, fused };

// Per-video-frame embedding sequence, T x 128.
struct EmbeddingSequence {
    Tensor values;  // [T, 128]
    Modality modality = Modality::visual;
};

// Checks the [T, embed] shape and finiteness. Throws ShapeMismatch/ValueRange.
const EmbeddingSequence& validate_embedding(const EmbeddingSequence& seq, int embed_dim = kEmbedDim);

// Elementwise sum of a visual and an audio sequence; the one place fused
// embeddings are produced. Throws ShapeMismatch on modality or shape abuse.
EmbeddingSequence fuse_embeddings(const EmbeddingSequence& visual, const EmbeddingSequence& audio);

enum class TemporalMode { none, forward_gru, bidirectional_gru, forward_lstm, bidirectional_lstm };
enum class StreamMode { face_and_body, face_only, body_only };

struct ModelConfig {
    int embed_dim = kEmbedDim;
    int input_channels = 1;                           // grayscale crops
    std::vector<int> visual_channels = {32, 64, 128}; // stage widths after the stride-2 stem
    std::vector<int> audio_channels = {16, 32, 64, 96};
    std::vector<int> audio_blocks = {3, 4, 6, 3};     // SE-ResNet34 layout
    int se_reduction = 16;
    int gru_hidden = 128;
    std::pair<int, int> kernel_pair = {3, 5};
    TemporalMode temporal = TemporalMode::bidirectional_gru;
    StreamMode streams = StreamMode::face_and_body;
    bool use_audio = true;
    std::uint64_t seed = 0;

    // channels/8 variant used by gradient-check style tests
    static ModelConfig tiny();
};

// Returns the sample unchanged if every invariant holds, else throws:
// MismatchedLengths, AudioDurationMismatch, ValueRange. Idempotent.
const ClipSample& validate_sample(const ClipSample& sample);

}  // namespace asdnb
