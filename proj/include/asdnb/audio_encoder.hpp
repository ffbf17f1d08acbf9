#pragma once

#include <memory>
#include <string>
#include <vector>

#include "asdnb/nn/layers.hpp"
#include "asdnb/types.hpp"

namespace asdnb {

// Residual basic block with a squeeze-and-excitation unit after the second
// batch norm; strided variants downsample both the time and frequency axes.
class SEBasicBlock {
public:
    SEBasicBlock(const std::string& name, int in_ch, int out_ch, int stride, int se_reduction,
                 nn::Rng& rng);

    Tensor forward(const Tensor& x, bool training);
    Tensor backward(const Tensor& gy);

    void params(nn::ParamRefs& out);
    void state(nn::StateRefs& out);

    nn::SEUnit& se() { return se_; }

private:
    nn::Conv2d conv1_, conv2_;
    nn::BatchNorm bn1_, bn2_;
    nn::SEUnit se_;
    nn::ReLU relu1_, relu_out_;
    std::unique_ptr<nn::Conv2d> down_conv_;
    std::unique_ptr<nn::BatchNorm> down_bn_;
};

// Thin SE-ResNet34 over the aligned MFCC image [B, 1, 4T, 13]: stage layout
// (3,4,6,3), time/freq stride 2 in the last two stages (4:1 temporal
// contract), global frequency pooling, linear head to the embedding width.
// Output [B, T, embed_dim].
class AudioEncoder {
public:
    AudioEncoder(const ModelConfig& config, nn::Rng& rng);

    Tensor forward(const Tensor& mfcc_image, bool training);  // throws NotAligned
    Tensor backward(const Tensor& gy);

    // single-clip surface: aligned [4T, 13] matrix -> audio embedding sequence
    EmbeddingSequence encode_clip(const Tensor& aligned_mfcc, bool training);

    void params(nn::ParamRefs& out);
    void state(nn::StateRefs& out);
    std::int64_t num_parameters();

private:
    int embed_dim_;
    std::int64_t batch_ = 0, frames_ = 0, freq_out_ = 0;
    int last_ch_;

    nn::Conv2d stem_;
    nn::BatchNorm stem_bn_;
    nn::ReLU stem_relu_;
    std::vector<std::unique_ptr<SEBasicBlock>> blocks_;
    std::unique_ptr<nn::Linear> head_;
};

}  // namespace asdnb
