#include "asdnb/types.hpp"

#include <cmath>
#include <cstdlib>

#include "asdnb/errors.hpp"

namespace asdnb {

ModelConfig ModelConfig::tiny() {
    ModelConfig c;
    c.embed_dim = 16;
    c.visual_channels = {4, 8, 16};
    c.audio_channels = {2, 4, 8, 12};
    c.gru_hidden = 16;
    return c;
}

const EmbeddingSequence& validate_embedding(const EmbeddingSequence& seq, int embed_dim) {
    if (!seq.values.defined() || seq.values.ndim() != 2 || seq.values.dim(1) != embed_dim)
        throw ShapeMismatch("embedding sequence is " +
                            (seq.values.defined() ? seq.values.shape_str() : std::string("undefined")) +
                            ", expected [T," + std::to_string(embed_dim) + "]");
    if (!seq.values.all_finite()) throw ValueRange("embedding sequence contains non-finite values");
    return seq;
}

EmbeddingSequence fuse_embeddings(const EmbeddingSequence& visual, const EmbeddingSequence& audio) {
    if (visual.modality != Modality::visual || audio.modality != Modality::audio)
        throw ShapeMismatch("fuse_embeddings expects one visual and one audio sequence");
    if (!visual.values.same_shape(audio.values))
        throw ShapeMismatch("embedding shapes differ: " + visual.values.shape_str() + " vs " +
                            audio.values.shape_str());
    EmbeddingSequence fused;
    fused.modality = Modality::fused;
    fused.values = visual.values.clone();
    fused.values.add_(audio.values);
    return fused;
}

const ClipSample& validate_sample(const ClipSample& sample) {
    const std::size_t t = sample.face_frames.size();
    if (t == 0) throw MismatchedLengths("empty track (T=0) in '" + sample.track_id + "'");
    if (sample.body_frames.size() != t)
        throw MismatchedLengths("face T=" + std::to_string(t) + " vs body T=" +
                                std::to_string(sample.body_frames.size()) + " in '" + sample.track_id + "'");
    if (sample.labels.size() != t)
        throw MismatchedLengths("labels length " + std::to_string(sample.labels.size()) +
                                " vs T=" + std::to_string(t) + " in '" + sample.track_id + "'");

    if (!(sample.fps > 0)) throw ValueRange("fps must be positive in '" + sample.track_id + "'");
    const Real expected = static_cast<Real>(t) / sample.fps;
    const Real actual = static_cast<Real>(sample.waveform.size()) / kSampleRate;
    if (std::abs(actual - expected) > 0.010 + 1e-12)
        throw AudioDurationMismatch("waveform " + std::to_string(actual) + " s vs frames " +
                                    std::to_string(expected) + " s in '" + sample.track_id + "'");

    for (std::size_t i = 0; i < t; ++i) {
        const Tensor& f = sample.face_frames[i];
        const Tensor& b = sample.body_frames[i];
        for (const Tensor* img : {&f, &b}) {
            if (img->ndim() != 3 || img->dim(1) != kFrameSize || img->dim(2) != kFrameSize)
                throw ValueRange("frame " + std::to_string(i) + " is " + img->shape_str() +
                                 ", expected [C,112,112] in '" + sample.track_id + "'");
            const Real* p = img->data();
            for (std::int64_t k = 0; k < img->numel(); ++k)
                if (!(p[k] >= 0.0 && p[k] <= 1.0))
                    throw ValueRange("pixel outside [0,1] at frame " + std::to_string(i) +
                                     " in '" + sample.track_id + "'");
        }
    }
    return sample;
}

}  // namespace asdnb
