#include "asdnb/visual_encoder.hpp"

#include "asdnb/errors.hpp"

namespace asdnb {

// ---------------------------------------------------------- DualPathBlock

DualPathBlock::DualPathBlock(const std::string& name, int in_ch, int out_ch, int spatial_stride,
                             bool temporal, nn::Rng& rng)
    : out_ch_(out_ch), temporal_(temporal),
      s3_(name + ".s3", in_ch, out_ch, 3, spatial_stride, 1, rng),
      s5_(name + ".s5", in_ch, out_ch, 5, spatial_stride, 2, rng),
      bn_s3_(name + ".bn_s3", out_ch), bn_s5_(name + ".bn_s5", out_ch) {
    if (temporal_) {
        t3_ = std::make_unique<nn::TemporalConv1d>(name + ".t3", out_ch, out_ch, 3, rng);
        bn_t3_ = std::make_unique<nn::BatchNorm>(name + ".bn_t3", out_ch);
        t5_ = std::make_unique<nn::TemporalConv1d>(name + ".t5", out_ch, out_ch, 5, rng);
        bn_t5_ = std::make_unique<nn::BatchNorm>(name + ".bn_t5", out_ch);
    }
}

void DualPathBlock::params(nn::ParamRefs& out) {
    s3_.params(out);
    bn_s3_.params(out);
    s5_.params(out);
    bn_s5_.params(out);
    if (temporal_) {
        t3_->params(out);
        bn_t3_->params(out);
        t5_->params(out);
        bn_t5_->params(out);
    }
}

void DualPathBlock::state(nn::StateRefs& out) {
    bn_s3_.state(out);
    bn_s5_.state(out);
    if (temporal_) {
        bn_t3_->state(out);
        bn_t5_->state(out);
    }
}

Tensor DualPathBlock::path_forward(int which, const Tensor& x, std::int64_t batch,
                                   std::int64_t frames, bool training) {
    nn::Conv2d& s = which == 3 ? s3_ : s5_;
    nn::BatchNorm& bn_s = which == 3 ? bn_s3_ : bn_s5_;
    nn::ReLU& relu_s = which == 3 ? relu_s3_ : relu_s5_;
    Tensor a = relu_s.forward(bn_s.forward(s.forward(x), training));
    if (!temporal_) return a;
    nn::TemporalConv1d& t = which == 3 ? *t3_ : *t5_;
    nn::BatchNorm& bn_t = which == 3 ? *bn_t3_ : *bn_t5_;
    nn::ReLU& relu_t = which == 3 ? relu_t3_ : relu_t5_;
    return relu_t.forward(bn_t.forward(t.forward(a, batch, frames), training));
}

Tensor DualPathBlock::path_backward(int which, const Tensor& gy) {
    Tensor g = gy;
    if (temporal_) {
        nn::TemporalConv1d& t = which == 3 ? *t3_ : *t5_;
        nn::BatchNorm& bn_t = which == 3 ? *bn_t3_ : *bn_t5_;
        nn::ReLU& relu_t = which == 3 ? relu_t3_ : relu_t5_;
        g = t.backward(bn_t.backward(relu_t.backward(g)));
    }
    nn::Conv2d& s = which == 3 ? s3_ : s5_;
    nn::BatchNorm& bn_s = which == 3 ? bn_s3_ : bn_s5_;
    nn::ReLU& relu_s = which == 3 ? relu_s3_ : relu_s5_;
    return s.backward(bn_s.backward(relu_s.backward(g)));
}

Tensor DualPathBlock::forward(const Tensor& x, std::int64_t batch, std::int64_t frames,
                              bool training) {
    Tensor p3 = path_forward(3, x, batch, frames, training);
    Tensor p5 = path_forward(5, x, batch, frames, training);
    p3.add_(p5);
    return relu_out_.forward(std::move(p3));
}

Tensor DualPathBlock::backward(const Tensor& gy) {
    Tensor g = relu_out_.backward(gy);
    Tensor gx = path_backward(5, g);
    gx.add_(path_backward(3, g));
    return gx;
}

// ------------------------------------------------------------- FusionJoin

FusionJoin::FusionJoin(const std::string& name, int src_ch, int dst_ch, nn::Rng& rng) {
    if (src_ch != dst_ch)
        proj_ = std::make_unique<nn::Conv2d>(name + ".proj", src_ch, dst_ch, 1, 1, 0, rng);
}

void FusionJoin::params(nn::ParamRefs& out) {
    if (proj_) proj_->params(out);
}

Tensor FusionJoin::forward(const Tensor& dst, const Tensor& src) {
    if (dst.dim(0) != src.dim(0) || dst.dim(2) != src.dim(2) || dst.dim(3) != src.dim(3))
        throw ShapeMismatch("fusion: dst " + dst.shape_str() + " vs src " + src.shape_str());
    Tensor mapped = proj_ ? proj_->forward(src) : src;
    if (!mapped.same_shape(dst))
        throw ShapeMismatch("fusion: dst " + dst.shape_str() + " vs projected src " + mapped.shape_str());
    Tensor y = dst.clone();
    y.add_(mapped);
    return y;
}

std::pair<Tensor, Tensor> FusionJoin::backward(const Tensor& gy) {
    Tensor gsrc = proj_ ? proj_->backward(gy) : gy;
    return {gy, std::move(gsrc)};
}

// ---------------------------------------------------------- VisualEncoder

VisualEncoder::VisualEncoder(const ModelConfig& config, nn::Rng& rng)
    : streams_(config.streams), embed_dim_(config.embed_dim) {
    const auto& vc = config.visual_channels;
    if (vc.size() != 3) throw ShapeMismatch("visual_channels must list 3 stage widths");
    if (config.kernel_pair != std::pair<int, int>{3, 5})
        throw ShapeMismatch("the dual-path kernel pair is fixed to (3,5)");
    const int in_ch = config.input_channels;

    auto build_stream = [&](Stream& s, const std::string& prefix) {
        s.stem = std::make_unique<DualPathBlock>(prefix + ".stem", in_ch, vc[0], 2, false, rng);
        s.stage1 = std::make_unique<DualPathBlock>(prefix + ".stage1", vc[0], vc[0], 2, true, rng);
        s.stage2 = std::make_unique<DualPathBlock>(prefix + ".stage2", vc[0], vc[1], 2, true, rng);
        s.stage3 = std::make_unique<DualPathBlock>(prefix + ".stage3", vc[1], vc[2], 2, true, rng);
    };

    if (streams_ != StreamMode::body_only) build_stream(face_, "visual.face");
    if (streams_ != StreamMode::face_only) build_stream(body_, "visual.body");
    if (streams_ == StreamMode::face_and_body) {
        fuse1_ = std::make_unique<FusionJoin>("visual.fuse1", vc[0], vc[0], rng);
        fuse2_ = std::make_unique<FusionJoin>("visual.fuse2", vc[1], vc[1], rng);
        fuse3_ = std::make_unique<FusionJoin>("visual.fuse3", vc[2], vc[2], rng);
    }
    proj_ = std::make_unique<nn::Linear>("visual.proj", vc[2], embed_dim_, rng);
}

void VisualEncoder::params(nn::ParamRefs& out) {
    for (Stream* s : {&face_, &body_}) {
        if (!s->stem) continue;
        s->stem->params(out);
        s->stage1->params(out);
        s->stage2->params(out);
        s->stage3->params(out);
    }
    if (fuse1_) fuse1_->params(out);
    if (fuse2_) fuse2_->params(out);
    if (fuse3_) fuse3_->params(out);
    proj_->params(out);
}

void VisualEncoder::state(nn::StateRefs& out) {
    for (Stream* s : {&face_, &body_}) {
        if (!s->stem) continue;
        s->stem->state(out);
        s->stage1->state(out);
        s->stage2->state(out);
        s->stage3->state(out);
    }
}

std::int64_t VisualEncoder::num_parameters() {
    nn::ParamRefs refs;
    params(refs);
    return nn::count_parameters(refs);
}

Tensor VisualEncoder::forward(const Tensor& face, const Tensor& body, std::int64_t batch,
                              std::int64_t frames, bool training) {
    batch_ = batch;
    frames_ = frames;

    Tensor pooled;
    if (streams_ == StreamMode::face_and_body) {
        Tensor f0 = face_.stem->forward(face, batch, frames, training);
        Tensor b0 = body_.stem->forward(body, batch, frames, training);
        Tensor f1 = face_.stage1->forward(f0, batch, frames, training);
        Tensor b1 = body_.stage1->forward(b0, batch, frames, training);
        Tensor b1f = fuse1_->forward(b1, f1);
        Tensor f2 = face_.stage2->forward(f1, batch, frames, training);
        Tensor b2 = body_.stage2->forward(b1f, batch, frames, training);
        Tensor b2f = fuse2_->forward(b2, f2);
        Tensor f3 = face_.stage3->forward(f2, batch, frames, training);
        Tensor b3 = body_.stage3->forward(b2f, batch, frames, training);
        Tensor fused = fuse3_->forward(f3, b3);
        pooled = pool_.forward(fused);
    } else {
        Stream& s = streams_ == StreamMode::face_only ? face_ : body_;
        const Tensor& x = streams_ == StreamMode::face_only ? face : body;
        Tensor a = s.stem->forward(x, batch, frames, training);
        a = s.stage1->forward(a, batch, frames, training);
        a = s.stage2->forward(a, batch, frames, training);
        a = s.stage3->forward(a, batch, frames, training);
        pooled = pool_.forward(a);
    }
    Tensor emb = proj_->forward(pooled);  // [B*T, embed]
    return emb.reshaped({batch, frames, embed_dim_});
}

EmbeddingSequence VisualEncoder::encode_clip(const Tensor& face, const Tensor& body,
                                             bool training) {
    const Tensor& present = face.defined() ? face : body;
    const std::int64_t frames = present.dim(0);
    EmbeddingSequence seq;
    seq.modality = Modality::visual;
    seq.values = forward(face, body, 1, frames, training).reshaped({frames, embed_dim_});
    return seq;
}

std::pair<Tensor, Tensor> VisualEncoder::backward(const Tensor& gy) {
    Tensor gpooled = proj_->backward(gy.reshaped({batch_ * frames_, embed_dim_}));
    Tensor g = pool_.backward(gpooled);

    if (streams_ == StreamMode::face_and_body) {
        auto [gf3, gb3] = fuse3_->backward(g);
        Tensor gf2 = face_.stage3->backward(gf3);
        Tensor gb2f = body_.stage3->backward(gb3);
        auto [gb2, gf2b] = fuse2_->backward(gb2f);
        gf2.add_(gf2b);
        Tensor gf1 = face_.stage2->backward(gf2);
        Tensor gb1f = body_.stage2->backward(gb2);
        auto [gb1, gf1b] = fuse1_->backward(gb1f);
        gf1.add_(gf1b);
        Tensor gf0 = face_.stage1->backward(gf1);
        Tensor gb0 = body_.stage1->backward(gb1);
        Tensor gface = face_.stem->backward(gf0);
        Tensor gbody = body_.stem->backward(gb0);
        return {std::move(gface), std::move(gbody)};
    }
    Stream& s = streams_ == StreamMode::face_only ? face_ : body_;
    Tensor gx = s.stage3->backward(g);
    gx = s.stage2->backward(gx);
    gx = s.stage1->backward(gx);
    gx = s.stem->backward(gx);
    if (streams_ == StreamMode::face_only) return {std::move(gx), Tensor()};
    return {Tensor(), std::move(gx)};
}

}  // namespace asdnb
