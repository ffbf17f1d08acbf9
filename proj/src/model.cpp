#include "asdnb/model.hpp"

#include "asdnb/errors.hpp"

namespace asdnb {

ASDnBModel::ASDnBModel(const ModelConfig& config) : config_(config) {
    nn::Rng rng(config.seed);
    visual_ = std::make_unique<VisualEncoder>(config, rng);
    if (config.use_audio) audio_ = std::make_unique<AudioEncoder>(config, rng);
    main_ = std::make_unique<SequenceClassifier>("classifier.main", config.embed_dim,
                                                 config.gru_hidden, config.temporal, rng);
    // The auxiliary visual head keeps the default temporal layout regardless
    // of the main classifier's ablation setting (the Table-6 axis varies the
    // main head only).
    aux_ = std::make_unique<SequenceClassifier>("classifier.aux", config.embed_dim,
                                                config.gru_hidden,
                                                TemporalMode::bidirectional_gru, rng);
}

void ASDnBModel::params(nn::ParamRefs& out) {
    visual_->params(out);
    if (audio_) audio_->params(out);
    main_->params(out);
    aux_->params(out);
}

void ASDnBModel::state(nn::StateRefs& out) {
    visual_->state(out);
    if (audio_) audio_->state(out);
}

std::int64_t ASDnBModel::num_parameters() {
    nn::ParamRefs refs;
    params(refs);
    return nn::count_parameters(refs);
}

ModelOutput ASDnBModel::forward(const Tensor& face, const Tensor& body, const Tensor& mfcc_image,
                                std::int64_t batch, std::int64_t frames, bool training) {
    Tensor vis = visual_->forward(face, body, batch, frames, training);  // [B,T,D]

    Tensor av = vis;
    audio_used_ = false;
    if (audio_) {
        if (!mfcc_image.defined()) throw ShapeMismatch("model requires an MFCC image input");
        Tensor aud = audio_->forward(mfcc_image, training);
        if (!aud.same_shape(vis))
            throw ShapeMismatch("audio embedding " + aud.shape_str() + " vs visual " + vis.shape_str());
        av = vis.clone();
        av.add_(aud);
        audio_used_ = true;
    }

    ModelOutput out;
    out.logits_av = main_->forward(av);
    out.logits_v = aux_->forward(vis);
    return out;
}

void ASDnBModel::backward(const Tensor& g_logits_av, const Tensor& g_logits_v) {
    Tensor d_av = main_->backward(g_logits_av);
    Tensor d_vis = aux_->backward(g_logits_v);
    d_vis.add_(d_av);
    if (audio_used_) audio_->backward(d_av);
    visual_->backward(d_vis);
}

}  // namespace asdnb
