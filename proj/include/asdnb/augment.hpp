#pragma once

#include <cstdint>
#include <vector>

#include "asdnb/types.hpp"

namespace asdnb {

struct AugmentationConfig {
    Real flip_prob = 0.5;
    Real rotate_degrees = 15.0;  // uniform in [-15, +15]
    Real crop_scale_min = 0.85;
    Real crop_scale_max = 1.0;
    Real negative_audio_prob = 0.5;
    Real snr_db_min = -5.0;
    Real snr_db_max = 5.0;
    std::uint64_t seed = 0;
    bool enabled = true;

    void validate() const;  // throws ValueRange
};

// One geometric transform (flip / rotate / crop+rescale) drawn per clip and
// applied identically to the face and body crop of every frame; labels and
// audio are untouched. Deterministic in (config.seed, clip_seed).
ClipSample augment_clip(const ClipSample& sample, const AugmentationConfig& config,
                        std::uint64_t clip_seed);

// Adds a donor waveform as noise at an SNR drawn from [snr_db_min,
// snr_db_max]; the donor is tiled when shorter than the clip audio. Labels
// are never changed. An infinite SNR bound yields zero gain (identity).
ClipSample negative_audio_mix(const ClipSample& sample, const std::vector<Real>& donor,
                              const AugmentationConfig& config, std::uint64_t clip_seed);

}  // namespace asdnb
