#pragma once

#include <cstdint>
#include <vector>

#include "asdnb/tensor.hpp"
#include "asdnb/types.hpp"

namespace asdnb {

// Contiguous window of min(clip_len, track length) frames with the matching
// audio slice; the offset is uniform per seed. Throws EmptyTrack.
ClipSample sample_clip(const ClipSample& track, int clip_len, std::uint64_t seed);

// Model-ready batch of clips with equal frame counts. face/body are
// [B*T, C, 112, 112], audio_image is [B, 1, 4T, 13] (MFCC aligned to the
// video rate), labels is [B, T].
struct BatchInputs {
    Tensor face, body, audio_image, labels;
    std::int64_t batch = 0;
    std::int64_t frames = 0;
};

// Validates every sample; throws MismatchedLengths when clip lengths differ
// within the batch.
BatchInputs make_batch(const std::vector<const ClipSample*>& clips, bool with_audio);

}  // namespace asdnb
