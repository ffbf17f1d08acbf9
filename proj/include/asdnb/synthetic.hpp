#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "asdnb/types.hpp"

namespace asdnb {

enum class SignalChannel { face, body, both };

// Closed-form oracle dataset: speaking frames render an oscillating bright
// patch in the designated channel(s) and a pure tone; non-speaking frames
// render static dim patches and low-level noise. Labels are exact by
// construction. feature_noise_prob re-renders that fraction of frames with
// the non-speaking appearance (labels untouched) so that only temporal
// context can recover them.
struct SyntheticSpec {
    int num_tracks = 20;
    int frames_per_track = 24;
    SignalChannel signal_channel = SignalChannel::both;
    Real tone_hz = 440.0;
    std::uint64_t seed = 0;
    Real fps = 25.0;
    int min_run = 5;   // label run-length bounds, in frames
    int max_run = 12;
    Real feature_noise_prob = 0.0;

    void validate() const;  // throws ValueRange
};

std::vector<ClipSample> generate_synthetic(const SyntheticSpec& spec);

// Directory layout: manifest.json plus one subdirectory per track holding
// face_%04d.pgm / body_%04d.pgm frames, audio.wav (16 kHz 16-bit PCM) and
// labels.json. Byte-identical for identical specs.
void write_synthetic_dataset(const SyntheticSpec& spec, const std::string& dir);
std::vector<ClipSample> load_track_dataset(const std::string& dir);

const char* to_string(SignalChannel c);
SignalChannel signal_channel_from_string(const std::string& s);  // throws ConfigError

}  // namespace asdnb
