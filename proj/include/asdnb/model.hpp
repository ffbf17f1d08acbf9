#pragma once

#include <memory>

#include "asdnb/audio_encoder.hpp"
#include "asdnb/classifier.hpp"
#include "asdnb/types.hpp"
#include "asdnb/visual_encoder.hpp"

namespace asdnb {

struct ModelOutput {
    Tensor logits_av;  // [B,T] main head (fused features; visual-only when audio is disabled)
    Tensor logits_v;   // [B,T] auxiliary head on visual embeddings
};

// Full model: visual encoder (face+body fusion), audio encoder, main
// classifier on the elementwise sum of the two embeddings, and an auxiliary
// visual-only classifier with independent parameters. The sum happens here,
// exactly once.
class ASDnBModel {
public:
    explicit ASDnBModel(const ModelConfig& config);

    ModelOutput forward(const Tensor& face, const Tensor& body, const Tensor& mfcc_image,
                        std::int64_t batch, std::int64_t frames, bool training);
    void backward(const Tensor& g_logits_av, const Tensor& g_logits_v);

    void params(nn::ParamRefs& out);
    void state(nn::StateRefs& out);
    std::int64_t num_parameters();

    const ModelConfig& config() const { return config_; }
    VisualEncoder& visual() { return *visual_; }
    AudioEncoder* audio() { return audio_.get(); }
    SequenceClassifier& main_classifier() { return *main_; }
    SequenceClassifier& aux_classifier() { return *aux_; }

private:
    ModelConfig config_;
    std::unique_ptr<VisualEncoder> visual_;
    std::unique_ptr<AudioEncoder> audio_;
    std::unique_ptr<SequenceClassifier> main_, aux_;
    bool audio_used_ = false;
};

}  // namespace asdnb
