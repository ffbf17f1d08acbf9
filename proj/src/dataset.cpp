#include "asdnb/dataset.hpp"

#include <cmath>
#include <cstring>
#include <random>

#include "asdnb/errors.hpp"
#include "asdnb/mfcc.hpp"

namespace asdnb {

ClipSample sample_clip(const ClipSample& track, int clip_len, std::uint64_t seed) {
    if (track.num_frames() == 0) throw EmptyTrack("'" + track.track_id + "' has no frames");
    if (clip_len < 1) throw ValueRange("clip_len must be >= 1");
    const int t_len = track.num_frames();
    const int window = std::min(clip_len, t_len);

    int start = 0;
    if (window < t_len) {
        std::mt19937_64 rng(seed);
        start = std::uniform_int_distribution<int>(0, t_len - window)(rng);
    }
    if (window == t_len) return track;

    ClipSample out;
    out.track_id = track.track_id;
    out.fps = track.fps;
    out.face_frames.assign(track.face_frames.begin() + start,
                           track.face_frames.begin() + start + window);
    out.body_frames.assign(track.body_frames.begin() + start,
                           track.body_frames.begin() + start + window);
    out.labels.assign(track.labels.begin() + start, track.labels.begin() + start + window);

    const Real samples_per_frame = static_cast<Real>(kSampleRate) / track.fps;
    const auto s0 = static_cast<std::size_t>(std::llround(start * samples_per_frame));
    const auto s1 = std::min(track.waveform.size(),
                             static_cast<std::size_t>(std::llround((start + window) * samples_per_frame)));
    out.waveform.assign(track.waveform.begin() + static_cast<std::ptrdiff_t>(s0),
                        track.waveform.begin() + static_cast<std::ptrdiff_t>(s1));
    return out;
}

BatchInputs make_batch(const std::vector<const ClipSample*>& clips, bool with_audio) {
    if (clips.empty()) throw EmptyDataset("make_batch: no clips");
    const std::int64_t b = static_cast<std::int64_t>(clips.size());
    const std::int64_t t = validate_sample(*clips[0]).num_frames();
    for (const ClipSample* c : clips)
        if (validate_sample(*c).num_frames() != t)
            throw MismatchedLengths("batch mixes clip lengths " + std::to_string(t) + " and " +
                                    std::to_string(c->num_frames()));

    BatchInputs out;
    out.batch = b;
    out.frames = t;
    const std::int64_t px = static_cast<std::int64_t>(kFrameSize) * kFrameSize;
    out.face = Tensor({b * t, 1, kFrameSize, kFrameSize});
    out.body = Tensor({b * t, 1, kFrameSize, kFrameSize});
    out.labels = Tensor({b, t});

    for (std::int64_t i = 0; i < b; ++i) {
        const ClipSample& c = *clips[static_cast<std::size_t>(i)];
        for (std::int64_t k = 0; k < t; ++k) {
            std::memcpy(out.face.data() + (i * t + k) * px,
                        c.face_frames[static_cast<std::size_t>(k)].data(),
                        static_cast<std::size_t>(px) * sizeof(Real));
            std::memcpy(out.body.data() + (i * t + k) * px,
                        c.body_frames[static_cast<std::size_t>(k)].data(),
                        static_cast<std::size_t>(px) * sizeof(Real));
            out.labels[i * t + k] = static_cast<Real>(c.labels[static_cast<std::size_t>(k)]);
        }
    }

    if (with_audio) {
        const std::int64_t rows = kAudioPerVideoFrame * t;
        out.audio_image = Tensor({b, 1, rows, kMfccCoeffs});
        for (std::int64_t i = 0; i < b; ++i) {
            const ClipSample& c = *clips[static_cast<std::size_t>(i)];
            const MFCCMatrix mfcc = compute_mfcc(c.waveform, kSampleRate);
            const Tensor aligned = align_audio_to_video(mfcc, t, c.fps);
            std::memcpy(out.audio_image.data() + i * rows * kMfccCoeffs, aligned.data(),
                        static_cast<std::size_t>(rows * kMfccCoeffs) * sizeof(Real));
        }
    }
    return out;
}

}  // namespace asdnb
