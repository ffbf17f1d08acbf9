#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "asdnb/nn/module.hpp"
#include "asdnb/tensor.hpp"

namespace asdnb::nn {

// All layers follow the same discipline: forward caches exactly what backward
// needs (inputs are cached as shallow copies and never mutated downstream),
// backward returns the input gradient and accumulates parameter gradients.

class Conv2d {
public:
    Conv2d(std::string name, int in_ch, int out_ch, int kernel, int stride, int pad, Rng& rng,
           bool bias = false);

    Tensor forward(const Tensor& x);  // [N,Cin,H,W] -> [N,Cout,Ho,Wo]
    Tensor backward(const Tensor& gy);

    void params(ParamRefs& out);
    std::int64_t out_h(std::int64_t h) const { return (h + 2 * pad_ - kernel_) / stride_ + 1; }

    Parameter weight;  // [Cout, Cin*k*k]
    Parameter bias;    // [Cout] when enabled

private:
    int in_ch_, out_ch_, kernel_, stride_, pad_;
    bool has_bias_;
    Tensor x_;
};

// 1D convolution over the frame axis, applied independently at every spatial
// location; same-padding so T is preserved. Clips are packed [B*T, C, H, W]
// and the kernel never crosses a clip boundary.
class TemporalConv1d {
public:
    TemporalConv1d(std::string name, int in_ch, int out_ch, int kernel, Rng& rng);

    Tensor forward(const Tensor& x, std::int64_t batch, std::int64_t frames);
    Tensor backward(const Tensor& gy);

    void params(ParamRefs& out);

    Parameter weight;  // [k, Cout, Cin]

private:
    int in_ch_, out_ch_, kernel_, pad_;
    std::int64_t batch_ = 0, frames_ = 0;
    Tensor x_;
};

class BatchNorm {
public:
    BatchNorm(std::string name, int channels, Real eps = 1e-5, Real momentum = 0.1);

    Tensor forward(const Tensor& x, bool training);  // [N,C,H,W]
    Tensor backward(const Tensor& gy);

    void params(ParamRefs& out);
    void state(StateRefs& out);

    Parameter gamma, beta;
    Tensor running_mean, running_var;

private:
    std::string name_;
    int channels_;
    Real eps_, momentum_;
    bool trained_forward_ = false;
    Tensor x_;
    std::vector<Real> mean_, invstd_;
};

// In-place rectifier; caches a byte mask so the activation buffer can be
// recycled by the caller.
class ReLU {
public:
    Tensor forward(Tensor x);
    Tensor backward(const Tensor& gy);

private:
    std::vector<std::uint8_t> mask_;
};

class Linear {
public:
    Linear(std::string name, int in_dim, int out_dim, Rng& rng, bool bias = true);

    Tensor forward(const Tensor& x);  // [..., in] -> [..., out]
    Tensor backward(const Tensor& gy);

    void params(ParamRefs& out);

    Parameter weight;  // [out, in]
    Parameter bias;    // [out]

private:
    int in_dim_, out_dim_;
    bool has_bias_;
    Tensor x_;
};

// Squeeze-and-excitation: per-channel gates in (0,1) from globally pooled
// activations; output = x * gate.
class SEUnit {
public:
    SEUnit(std::string name, int channels, int reduction, Rng& rng);

    Tensor forward(const Tensor& x);  // [N,C,H,W]
    Tensor backward(const Tensor& gy);

    void params(ParamRefs& out);

    Linear fc1, fc2;

    // exposed for tests: gate values of the last forward
    const Tensor& last_gate() const { return gate_; }

private:
    int channels_, bottleneck_;
    Tensor x_, squeezed_, hidden_, gate_;
    std::vector<std::uint8_t> hidden_mask_;
};

// Global average pool over H and W: [N,C,H,W] -> [N,C].
class SpatialAvgPool {
public:
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);

private:
    std::int64_t n_ = 0, c_ = 0, h_ = 0, w_ = 0;
};

// gemm helpers shared by the recurrent layers.
// C(MxN) = A(MxK) * B(KxN), optionally accumulating into C.
void gemm(const Real* a, const Real* b, Real* c, std::int64_t m, std::int64_t k, std::int64_t n,
          bool accumulate);
// C(MxN) = A(KxM)^T * B(KxN)
void gemm_at(const Real* a, const Real* b, Real* c, std::int64_t m, std::int64_t k, std::int64_t n,
             bool accumulate);
// C(MxN) = A(MxK) * B(NxK)^T
void gemm_bt(const Real* a, const Real* b, Real* c, std::int64_t m, std::int64_t k, std::int64_t n,
             bool accumulate);

}  // namespace asdnb::nn
