#include "asdnb/audio_encoder.hpp"

#include "asdnb/errors.hpp"
#include "asdnb/mfcc.hpp"

namespace asdnb {

// ------------------------------------------------------------ SEBasicBlock

SEBasicBlock::SEBasicBlock(const std::string& name, int in_ch, int out_ch, int stride,
                           int se_reduction, nn::Rng& rng)
    : conv1_(name + ".conv1", in_ch, out_ch, 3, stride, 1, rng),
      conv2_(name + ".conv2", out_ch, out_ch, 3, 1, 1, rng),
      bn1_(name + ".bn1", out_ch), bn2_(name + ".bn2", out_ch),
      se_(name + ".se", out_ch, se_reduction, rng) {
    if (stride != 1 || in_ch != out_ch) {
        down_conv_ = std::make_unique<nn::Conv2d>(name + ".down", in_ch, out_ch, 1, stride, 0, rng);
        down_bn_ = std::make_unique<nn::BatchNorm>(name + ".down_bn", out_ch);
    }
}

void SEBasicBlock::params(nn::ParamRefs& out) {
    conv1_.params(out);
    bn1_.params(out);
    conv2_.params(out);
    bn2_.params(out);
    se_.params(out);
    if (down_conv_) {
        down_conv_->params(out);
        down_bn_->params(out);
    }
}

void SEBasicBlock::state(nn::StateRefs& out) {
    bn1_.state(out);
    bn2_.state(out);
    if (down_bn_) down_bn_->state(out);
}

Tensor SEBasicBlock::forward(const Tensor& x, bool training) {
    Tensor y = relu1_.forward(bn1_.forward(conv1_.forward(x), training));
    y = se_.forward(bn2_.forward(conv2_.forward(y), training));
    if (down_conv_) {
        y.add_(down_bn_->forward(down_conv_->forward(x), training));
    } else {
        y.add_(x);
    }
    return relu_out_.forward(std::move(y));
}

Tensor SEBasicBlock::backward(const Tensor& gy) {
    Tensor g = relu_out_.backward(gy);
    Tensor gx_main =
        conv1_.backward(bn1_.backward(relu1_.backward(conv2_.backward(bn2_.backward(se_.backward(g))))));
    if (down_conv_) {
        gx_main.add_(down_conv_->backward(down_bn_->backward(g)));
    } else {
        gx_main.add_(g);
    }
    return gx_main;
}

// ------------------------------------------------------------ AudioEncoder

AudioEncoder::AudioEncoder(const ModelConfig& config, nn::Rng& rng)
    : embed_dim_(config.embed_dim),
      stem_("audio.stem", 1, config.audio_channels.at(0), 3, 1, 1, rng),
      stem_bn_("audio.stem_bn", config.audio_channels.at(0)) {
    const auto& ch = config.audio_channels;
    const auto& nb = config.audio_blocks;
    if (ch.size() != 4 || nb.size() != 4)
        throw ShapeMismatch("audio encoder expects 4 stage widths and 4 block counts");
    int in_ch = ch[0];
    for (int stage = 0; stage < 4; ++stage) {
        // time/frequency downsampling only in the last two stages: 4T -> T
        const int first_stride = stage >= 2 ? 2 : 1;
        for (int b = 0; b < nb[static_cast<std::size_t>(stage)]; ++b) {
            const std::string name =
                "audio.s" + std::to_string(stage + 1) + ".b" + std::to_string(b);
            blocks_.push_back(std::make_unique<SEBasicBlock>(
                name, in_ch, ch[static_cast<std::size_t>(stage)], b == 0 ? first_stride : 1,
                config.se_reduction, rng));
            in_ch = ch[static_cast<std::size_t>(stage)];
        }
    }
    last_ch_ = in_ch;
    head_ = std::make_unique<nn::Linear>("audio.head", last_ch_, embed_dim_, rng);
}

void AudioEncoder::params(nn::ParamRefs& out) {
    stem_.params(out);
    stem_bn_.params(out);
    for (auto& b : blocks_) b->params(out);
    head_->params(out);
}

void AudioEncoder::state(nn::StateRefs& out) {
    stem_bn_.state(out);
    for (auto& b : blocks_) b->state(out);
}

std::int64_t AudioEncoder::num_parameters() {
    nn::ParamRefs refs;
    params(refs);
    return nn::count_parameters(refs);
}

Tensor AudioEncoder::forward(const Tensor& mfcc_image, bool training) {
    if (mfcc_image.ndim() != 4 || mfcc_image.dim(1) != 1 || mfcc_image.dim(3) != kMfccCoeffs)
        throw ShapeMismatch("audio encoder input " + mfcc_image.shape_str());
    if (mfcc_image.dim(2) % kAudioPerVideoFrame != 0)
        throw NotAligned(std::to_string(mfcc_image.dim(2)) + " MFCC rows is not a multiple of 4");

    batch_ = mfcc_image.dim(0);
    frames_ = mfcc_image.dim(2) / kAudioPerVideoFrame;

    Tensor y = stem_relu_.forward(stem_bn_.forward(stem_.forward(mfcc_image), training));
    for (auto& b : blocks_) y = b->forward(y, training);
    // y: [B, C, T, F]
    if (y.dim(2) != frames_)
        throw ShapeMismatch("audio temporal stride schedule yielded " + y.shape_str());
    freq_out_ = y.dim(3);

    Tensor pooled({batch_, frames_, last_ch_});
    const std::int64_t f = freq_out_;
    for (std::int64_t b = 0; b < batch_; ++b)
        for (std::int64_t c = 0; c < last_ch_; ++c)
            for (std::int64_t t = 0; t < frames_; ++t) {
                const Real* p = y.data() + ((b * last_ch_ + c) * frames_ + t) * f;
                Real sum = 0;
                for (std::int64_t k = 0; k < f; ++k) sum += p[k];
                pooled[(b * frames_ + t) * last_ch_ + c] = sum / static_cast<Real>(f);
            }
    return head_->forward(pooled);  // [B, T, embed]
}

EmbeddingSequence AudioEncoder::encode_clip(const Tensor& aligned_mfcc, bool training) {
    if (aligned_mfcc.ndim() != 2 || aligned_mfcc.dim(1) != kMfccCoeffs)
        throw ShapeMismatch("encode_clip expects a [4T,13] matrix, got " + aligned_mfcc.shape_str());
    const Tensor image = aligned_mfcc.reshaped({1, 1, aligned_mfcc.dim(0), kMfccCoeffs});
    EmbeddingSequence seq;
    seq.modality = Modality::audio;
    seq.values = forward(image, training)
                     .reshaped({aligned_mfcc.dim(0) / kAudioPerVideoFrame, embed_dim_});
    return seq;
}

Tensor AudioEncoder::backward(const Tensor& gy) {
    Tensor gpooled = head_->backward(gy);  // [B, T, C]
    Tensor g({batch_, last_ch_, frames_, freq_out_});
    const Real inv = 1.0 / static_cast<Real>(freq_out_);
    for (std::int64_t b = 0; b < batch_; ++b)
        for (std::int64_t c = 0; c < last_ch_; ++c)
            for (std::int64_t t = 0; t < frames_; ++t) {
                const Real d = gpooled[(b * frames_ + t) * last_ch_ + c] * inv;
                Real* p = g.data() + ((b * last_ch_ + c) * frames_ + t) * freq_out_;
                for (std::int64_t k = 0; k < freq_out_; ++k) p[k] = d;
            }
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) g = (*it)->backward(g);
    return stem_.backward(stem_bn_.backward(stem_relu_.backward(g)));
}

}  // namespace asdnb
