#pragma once

#include <memory>
#include <string>
#include <vector>

#include "asdnb/nn/layers.hpp"
#include "asdnb/types.hpp"

namespace asdnb {

// One encoder block: two parallel paths at kernel sizes 3 and 5, each a
// spatial 2D conv (optionally followed by a temporal 1D conv), every conv
// followed by batch norm and rectification; the block output is the
// elementwise sum of the paths, rectified.
class DualPathBlock {
public:
    DualPathBlock(const std::string& name, int in_ch, int out_ch, int spatial_stride,
                  bool temporal, nn::Rng& rng);

    Tensor forward(const Tensor& x, std::int64_t batch, std::int64_t frames, bool training);
    Tensor backward(const Tensor& gy);

    void params(nn::ParamRefs& out);
    void state(nn::StateRefs& out);

    int out_channels() const { return out_ch_; }

private:
    Tensor path_forward(int which, const Tensor& x, std::int64_t batch, std::int64_t frames,
                        bool training);
    Tensor path_backward(int which, const Tensor& gy);

    int out_ch_;
    bool temporal_;
    nn::Conv2d s3_, s5_;
    nn::BatchNorm bn_s3_, bn_s5_;
    nn::ReLU relu_s3_, relu_s5_;
    std::unique_ptr<nn::TemporalConv1d> t3_, t5_;
    std::unique_ptr<nn::BatchNorm> bn_t3_, bn_t5_;
    nn::ReLU relu_t3_, relu_t5_;
    nn::ReLU relu_out_;
};

// Elementwise fusion point: dst + projection(src). The projection is a
// bias-free 1x1 channel map, identity when channel counts already match.
class FusionJoin {
public:
    FusionJoin(const std::string& name, int src_ch, int dst_ch, nn::Rng& rng);

    Tensor forward(const Tensor& dst, const Tensor& src);
    // returns (grad_dst, grad_src)
    std::pair<Tensor, Tensor> backward(const Tensor& gy);

    void params(nn::ParamRefs& out);
    bool has_projection() const { return proj_ != nullptr; }

private:
    std::unique_ptr<nn::Conv2d> proj_;
};

// Dual-input visual encoder: separate face and body stems and stages, face
// fused into body after stages 1 and 2, body fused back into face after
// stage 3, spatial average pooling, then a per-frame projection to the
// embedding width. Single-stream variants skip the other stem and all fusion.
class VisualEncoder {
public:
    VisualEncoder(const ModelConfig& config, nn::Rng& rng);

    // face/body: [B*T, C, 112, 112] (the unused stream may be empty in
    // single-stream modes). Returns [B, T, embed_dim].
    Tensor forward(const Tensor& face, const Tensor& body, std::int64_t batch,
                   std::int64_t frames, bool training);
    // returns (grad_face, grad_body); undefined tensors for absent streams
    std::pair<Tensor, Tensor> backward(const Tensor& gy);

    // single-clip surface: [T,1,112,112] crops -> visual embedding sequence
    EmbeddingSequence encode_clip(const Tensor& face, const Tensor& body, bool training);

    void params(nn::ParamRefs& out);
    void state(nn::StateRefs& out);
    std::int64_t num_parameters();

    // Temporal receptive-field radius of the embedding w.r.t. the inputs:
    // each of the three stage blocks contributes one temporal conv pair of
    // max kernel 5 (radius 2); the stem and the output projection are
    // frame-local.
    static constexpr int kTemporalRadius = 6;

private:
    StreamMode streams_;
    int embed_dim_;
    std::int64_t batch_ = 0, frames_ = 0;

    struct Stream {
        std::unique_ptr<DualPathBlock> stem, stage1, stage2, stage3;
    };
    Stream face_, body_;
    std::unique_ptr<FusionJoin> fuse1_, fuse2_, fuse3_;
    nn::SpatialAvgPool pool_;
    std::unique_ptr<nn::Linear> proj_;
};

}  // namespace asdnb
