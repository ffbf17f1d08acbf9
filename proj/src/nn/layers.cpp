#include "asdnb/nn/layers.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstring>

#include "asdnb/errors.hpp"
#include "asdnb/threading.hpp"

namespace asdnb::nn {

namespace {

using EMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<EMat>;
using CMap = Eigen::Map<const EMat>;

// The im2col buffer covers a band of output rows [oh0, oh1) so it stays
// cache-resident between the fill and the GEMM that consumes it.
void im2col_band(const Real* x, std::int64_t c_in, std::int64_t h, std::int64_t w, int kernel,
                 int stride, int pad, std::int64_t wo, std::int64_t oh0, std::int64_t oh1,
                 Real* col) {
    const std::int64_t band = (oh1 - oh0) * wo;
    for (std::int64_t c = 0; c < c_in; ++c) {
        const Real* plane = x + c * h * w;
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
                Real* row = col + ((c * kernel + ky) * kernel + kx) * band;
                for (std::int64_t oh = oh0; oh < oh1; ++oh) {
                    const std::int64_t ih = oh * stride - pad + ky;
                    Real* dst = row + (oh - oh0) * wo;
                    if (ih < 0 || ih >= h) {
                        std::memset(dst, 0, static_cast<std::size_t>(wo) * sizeof(Real));
                        continue;
                    }
                    const Real* src = plane + ih * w;
                    std::int64_t ow = 0;
                    if (stride == 1) {
                        const std::int64_t shift = kx - pad;  // iw = ow + shift
                        const std::int64_t lo = std::max<std::int64_t>(0, -shift);
                        const std::int64_t hi = std::min<std::int64_t>(wo, w - shift);
                        for (; ow < lo; ++ow) dst[ow] = 0;
                        if (hi > lo)
                            std::memcpy(dst + lo, src + lo + shift,
                                        static_cast<std::size_t>(hi - lo) * sizeof(Real));
                        for (ow = std::max(lo, hi); ow < wo; ++ow) dst[ow] = 0;
                    } else {
                        for (; ow < wo; ++ow) {
                            const std::int64_t iw = ow * stride - pad + kx;
                            dst[ow] = (iw >= 0 && iw < w) ? src[iw] : 0.0;
                        }
                    }
                }
            }
        }
    }
}

// Scatter-add of a column-band gradient back onto one frame's input.
void col2im_band(const Real* col, std::int64_t c_in, std::int64_t h, std::int64_t w, int kernel,
                 int stride, int pad, std::int64_t wo, std::int64_t oh0, std::int64_t oh1,
                 Real* gx) {
    const std::int64_t band = (oh1 - oh0) * wo;
    for (std::int64_t c = 0; c < c_in; ++c) {
        Real* plane = gx + c * h * w;
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
                const Real* row = col + ((c * kernel + ky) * kernel + kx) * band;
                for (std::int64_t oh = oh0; oh < oh1; ++oh) {
                    const std::int64_t ih = oh * stride - pad + ky;
                    if (ih < 0 || ih >= h) continue;
                    const Real* src = row + (oh - oh0) * wo;
                    Real* dst = plane + ih * w;
                    for (std::int64_t ow = 0; ow < wo; ++ow) {
                        const std::int64_t iw = ow * stride - pad + kx;
                        if (iw >= 0 && iw < w) dst[iw] += src[ow];
                    }
                }
            }
        }
    }
}

// Output rows per band, sized so the column buffer stays within ~1.5 MB.
std::int64_t band_rows(std::int64_t col_rows, std::int64_t wo, std::int64_t ho) {
    const std::int64_t budget = (3 << 19) / static_cast<std::int64_t>(sizeof(Real));  // 1.5 MB
    std::int64_t rows = budget / std::max<std::int64_t>(1, col_rows * wo);
    return std::clamp<std::int64_t>(rows, 1, ho);
}

}  // namespace

void gemm(const Real* a, const Real* b, Real* c, std::int64_t m, std::int64_t k, std::int64_t n,
          bool accumulate) {
    CMap A(a, m, k);
    CMap B(b, k, n);
    Map C(c, m, n);
    if (accumulate)
        C.noalias() += A * B;
    else
        C.noalias() = A * B;
}

void gemm_at(const Real* a, const Real* b, Real* c, std::int64_t m, std::int64_t k, std::int64_t n,
             bool accumulate) {
    CMap A(a, k, m);
    CMap B(b, k, n);
    Map C(c, m, n);
    if (accumulate)
        C.noalias() += A.transpose() * B;
    else
        C.noalias() = A.transpose() * B;
}

void gemm_bt(const Real* a, const Real* b, Real* c, std::int64_t m, std::int64_t k, std::int64_t n,
             bool accumulate) {
    CMap A(a, m, k);
    CMap B(b, n, k);
    Map C(c, m, n);
    if (accumulate)
        C.noalias() += A * B.transpose();
    else
        C.noalias() = A * B.transpose();
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(std::string name, int in_ch, int out_ch, int kernel, int stride, int pad, Rng& rng,
               bool bias_enabled)
    : in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride), pad_(pad),
      has_bias_(bias_enabled) {
    weight = Parameter(name + ".weight",
                       Tensor({out_ch, static_cast<std::int64_t>(in_ch) * kernel * kernel}));
    const std::int64_t fan_in = static_cast<std::int64_t>(in_ch) * kernel * kernel;
    init_uniform_fan_in(weight.value, fan_in, rng);
    if (has_bias_) {
        bias = Parameter(name + ".bias", Tensor({out_ch}));
        init_uniform_fan_in(bias.value, fan_in, rng);
    }
}

void Conv2d::params(ParamRefs& out) {
    out.push_back(&weight);
    if (has_bias_) out.push_back(&bias);
}

Tensor Conv2d::forward(const Tensor& x) {
    if (x.ndim() != 4 || x.dim(1) != in_ch_)
        throw ShapeMismatch("Conv2d " + weight.name + ": input " + x.shape_str());
    x_ = x;
    const std::int64_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
    const std::int64_t ho = out_h(h), wo = out_h(w);
    if (ho < 1 || wo < 1) throw ShapeMismatch("Conv2d " + weight.name + ": input too small " + x.shape_str());
    Tensor y({n, out_ch_, ho, wo});

    const std::int64_t col_rows = static_cast<std::int64_t>(in_ch_) * kernel_ * kernel_;
    const std::int64_t rows_per_band = band_rows(col_rows, wo, ho);
    const int nt = num_threads();
    std::vector<std::vector<Real>> scratch(static_cast<std::size_t>(nt));
    // y is written in column bands: [Cout, band] with row stride ho*wo
    std::vector<std::vector<Real>> ybuf(static_cast<std::size_t>(nt));
    parallel_for(n, [&](std::int64_t begin, std::int64_t end, int tid) {
        auto& col = scratch[static_cast<std::size_t>(tid)];
        col.resize(static_cast<std::size_t>(col_rows * rows_per_band * wo));
        auto& yband = ybuf[static_cast<std::size_t>(tid)];
        yband.resize(static_cast<std::size_t>(out_ch_ * rows_per_band * wo));
        for (std::int64_t i = begin; i < end; ++i) {
            Real* yd = y.data() + i * out_ch_ * ho * wo;
            for (std::int64_t oh0 = 0; oh0 < ho; oh0 += rows_per_band) {
                const std::int64_t oh1 = std::min(ho, oh0 + rows_per_band);
                const std::int64_t band = (oh1 - oh0) * wo;
                im2col_band(x.data() + i * in_ch_ * h * w, in_ch_, h, w, kernel_, stride_, pad_, wo,
                            oh0, oh1, col.data());
                gemm(weight.value.data(), col.data(), yband.data(), out_ch_, col_rows, band, false);
                for (int c = 0; c < out_ch_; ++c)
                    std::memcpy(yd + static_cast<std::int64_t>(c) * ho * wo + oh0 * wo,
                                yband.data() + static_cast<std::int64_t>(c) * band,
                                static_cast<std::size_t>(band) * sizeof(Real));
            }
            if (has_bias_) {
                for (int c = 0; c < out_ch_; ++c) {
                    const Real b = bias.value[c];
                    Real* p = yd + static_cast<std::int64_t>(c) * ho * wo;
                    for (std::int64_t s = 0; s < ho * wo; ++s) p[s] += b;
                }
            }
        }
    });
    return y;
}

Tensor Conv2d::backward(const Tensor& gy) {
    const std::int64_t n = x_.dim(0), h = x_.dim(2), w = x_.dim(3);
    const std::int64_t ho = gy.dim(2), wo = gy.dim(3);
    const std::int64_t col_rows = static_cast<std::int64_t>(in_ch_) * kernel_ * kernel_;
    Tensor gx = Tensor::zeros(x_.shape());

    const std::int64_t rows_per_band = band_rows(col_rows, wo, ho);
    const int nt = num_threads();
    std::vector<std::vector<Real>> scratch(static_cast<std::size_t>(nt));
    std::vector<Tensor> gw_partial(static_cast<std::size_t>(nt));
    std::vector<Tensor> gb_partial(static_cast<std::size_t>(nt));
    parallel_for(n, [&](std::int64_t begin, std::int64_t end, int tid) {
        auto& buf = scratch[static_cast<std::size_t>(tid)];
        const std::int64_t band_cap = rows_per_band * wo;
        buf.resize(static_cast<std::size_t>((2 * col_rows + out_ch_) * band_cap));
        Real* col = buf.data();
        Real* colgrad = col + col_rows * band_cap;
        Real* gyband = colgrad + col_rows * band_cap;
        Tensor& gw = gw_partial[static_cast<std::size_t>(tid)];
        gw = Tensor::zeros(weight.value.shape());
        Tensor& gb = gb_partial[static_cast<std::size_t>(tid)];
        if (has_bias_) gb = Tensor::zeros({out_ch_});
        for (std::int64_t i = begin; i < end; ++i) {
            const Real* gyd = gy.data() + i * out_ch_ * ho * wo;
            for (std::int64_t oh0 = 0; oh0 < ho; oh0 += rows_per_band) {
                const std::int64_t oh1 = std::min(ho, oh0 + rows_per_band);
                const std::int64_t band = (oh1 - oh0) * wo;
                for (int c = 0; c < out_ch_; ++c)
                    std::memcpy(gyband + static_cast<std::int64_t>(c) * band,
                                gyd + static_cast<std::int64_t>(c) * ho * wo + oh0 * wo,
                                static_cast<std::size_t>(band) * sizeof(Real));
                im2col_band(x_.data() + i * in_ch_ * h * w, in_ch_, h, w, kernel_, stride_, pad_,
                            wo, oh0, oh1, col);
                gemm_bt(gyband, col, gw.data(), out_ch_, band, col_rows, true);
                gemm_at(weight.value.data(), gyband, colgrad, col_rows, out_ch_, band, false);
                col2im_band(colgrad, in_ch_, h, w, kernel_, stride_, pad_, wo, oh0, oh1,
                            gx.data() + i * in_ch_ * h * w);
            }
            if (has_bias_) {
                for (int c = 0; c < out_ch_; ++c) {
                    Real s = 0;
                    const Real* p = gyd + static_cast<std::int64_t>(c) * ho * wo;
                    for (std::int64_t k = 0; k < ho * wo; ++k) s += p[k];
                    gb[c] += s;
                }
            }
        }
    });
    for (int t = 0; t < nt; ++t) {
        if (gw_partial[static_cast<std::size_t>(t)].defined())
            weight.grad.add_(gw_partial[static_cast<std::size_t>(t)]);
        if (has_bias_ && gb_partial[static_cast<std::size_t>(t)].defined())
            bias.grad.add_(gb_partial[static_cast<std::size_t>(t)]);
    }
    x_ = Tensor();
    return gx;
}

// --------------------------------------------------------- TemporalConv1d

TemporalConv1d::TemporalConv1d(std::string name, int in_ch, int out_ch, int kernel, Rng& rng)
    : in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), pad_((kernel - 1) / 2) {
    weight = Parameter(name + ".weight", Tensor({kernel, out_ch, in_ch}));
    init_uniform_fan_in(weight.value, static_cast<std::int64_t>(in_ch) * kernel, rng);
}

void TemporalConv1d::params(ParamRefs& out) {
    out.push_back(&weight);
}

Tensor TemporalConv1d::forward(const Tensor& x, std::int64_t batch, std::int64_t frames) {
    if (x.ndim() != 4 || x.dim(1) != in_ch_ || x.dim(0) != batch * frames)
        throw ShapeMismatch("TemporalConv1d " + weight.name + ": input " + x.shape_str());
    x_ = x;
    batch_ = batch;
    frames_ = frames;
    const std::int64_t s = x.dim(2) * x.dim(3);
    Tensor y({x.dim(0), out_ch_, x.dim(2), x.dim(3)});

    parallel_for(x.dim(0), [&](std::int64_t begin, std::int64_t end, int) {
        for (std::int64_t i = begin; i < end; ++i) {
            const std::int64_t b = i / frames_, t = i % frames_;
            Real* yd = y.data() + i * out_ch_ * s;
            bool first = true;
            for (int dk = 0; dk < kernel_; ++dk) {
                const std::int64_t ti = t + dk - pad_;
                if (ti < 0 || ti >= frames_) continue;
                const Real* xd = x.data() + (b * frames_ + ti) * in_ch_ * s;
                gemm(weight.value.data() + static_cast<std::int64_t>(dk) * out_ch_ * in_ch_, xd, yd,
                     out_ch_, in_ch_, s, !first);
                first = false;
            }
            if (first) std::memset(yd, 0, static_cast<std::size_t>(out_ch_ * s) * sizeof(Real));
        }
    });
    return y;
}

Tensor TemporalConv1d::backward(const Tensor& gy) {
    const std::int64_t s = x_.dim(2) * x_.dim(3);
    Tensor gx({x_.dim(0), in_ch_, x_.dim(2), x_.dim(3)});

    // dx[t] = sum_dk W_dk^T * gy[t - dk + pad]
    parallel_for(x_.dim(0), [&](std::int64_t begin, std::int64_t end, int) {
        for (std::int64_t i = begin; i < end; ++i) {
            const std::int64_t b = i / frames_, t = i % frames_;
            Real* gxd = gx.data() + i * in_ch_ * s;
            bool first = true;
            for (int dk = 0; dk < kernel_; ++dk) {
                const std::int64_t to = t - dk + pad_;
                if (to < 0 || to >= frames_) continue;
                const Real* gyd = gy.data() + (b * frames_ + to) * out_ch_ * s;
                gemm_at(weight.value.data() + static_cast<std::int64_t>(dk) * out_ch_ * in_ch_, gyd,
                        gxd, in_ch_, out_ch_, s, !first);
                first = false;
            }
            if (first) std::memset(gxd, 0, static_cast<std::size_t>(in_ch_ * s) * sizeof(Real));
        }
    });

    // dW_dk = sum_t gy[t] * x[t + dk - pad]^T
    const int nt = num_threads();
    std::vector<Tensor> gw_partial(static_cast<std::size_t>(nt));
    parallel_for(x_.dim(0), [&](std::int64_t begin, std::int64_t end, int tid) {
        Tensor& gw = gw_partial[static_cast<std::size_t>(tid)];
        gw = Tensor::zeros(weight.value.shape());
        for (std::int64_t i = begin; i < end; ++i) {
            const std::int64_t b = i / frames_, t = i % frames_;
            const Real* gyd = gy.data() + i * out_ch_ * s;
            for (int dk = 0; dk < kernel_; ++dk) {
                const std::int64_t ti = t + dk - pad_;
                if (ti < 0 || ti >= frames_) continue;
                const Real* xd = x_.data() + (b * frames_ + ti) * in_ch_ * s;
                gemm_bt(gyd, xd, gw.data() + static_cast<std::int64_t>(dk) * out_ch_ * in_ch_,
                        out_ch_, s, in_ch_, true);
            }
        }
    });
    for (int t = 0; t < nt; ++t)
        if (gw_partial[static_cast<std::size_t>(t)].defined())
            weight.grad.add_(gw_partial[static_cast<std::size_t>(t)]);
    x_ = Tensor();
    return gx;
}

// -------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(std::string name, int channels, Real eps, Real momentum)
    : name_(std::move(name)), channels_(channels), eps_(eps), momentum_(momentum) {
    gamma = Parameter(name_ + ".gamma", Tensor::full({channels}, 1.0));
    beta = Parameter(name_ + ".beta", Tensor::zeros({channels}));
    running_mean = Tensor::zeros({channels});
    running_var = Tensor::full({channels}, 1.0);
}

void BatchNorm::params(ParamRefs& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
}

void BatchNorm::state(StateRefs& out) {
    out.emplace_back(name_ + ".running_mean", &running_mean);
    out.emplace_back(name_ + ".running_var", &running_var);
}

Tensor BatchNorm::forward(const Tensor& x, bool training) {
    if (x.ndim() != 4 || x.dim(1) != channels_)
        throw ShapeMismatch("BatchNorm " + name_ + ": input " + x.shape_str());
    const std::int64_t n = x.dim(0), s = x.dim(2) * x.dim(3);
    const std::int64_t m = n * s;
    mean_.assign(static_cast<std::size_t>(channels_), 0.0);
    invstd_.assign(static_cast<std::size_t>(channels_), 0.0);
    trained_forward_ = training;

    if (training) {
        std::vector<Real> var(static_cast<std::size_t>(channels_), 0.0);
        parallel_for(channels_, [&](std::int64_t begin, std::int64_t end, int) {
            for (std::int64_t c = begin; c < end; ++c) {
                Real sum = 0, sq = 0;
                for (std::int64_t i = 0; i < n; ++i) {
                    const Real* p = x.data() + (i * channels_ + c) * s;
                    for (std::int64_t k = 0; k < s; ++k) {
                        sum += p[k];
                        sq += p[k] * p[k];
                    }
                }
                const Real mu = sum / static_cast<Real>(m);
                const Real v = sq / static_cast<Real>(m) - mu * mu;
                mean_[static_cast<std::size_t>(c)] = mu;
                var[static_cast<std::size_t>(c)] = v < 0 ? 0 : v;
            }
        });
        for (int c = 0; c < channels_; ++c) {
            const Real v = var[static_cast<std::size_t>(c)];
            invstd_[static_cast<std::size_t>(c)] = 1.0 / std::sqrt(v + eps_);
            // unbiased variance feeds the running estimate
            const Real v_unbiased = m > 1 ? v * static_cast<Real>(m) / static_cast<Real>(m - 1) : v;
            running_mean[c] = (1 - momentum_) * running_mean[c] + momentum_ * mean_[static_cast<std::size_t>(c)];
            running_var[c] = (1 - momentum_) * running_var[c] + momentum_ * v_unbiased;
        }
        x_ = x;
    } else {
        for (int c = 0; c < channels_; ++c) {
            mean_[static_cast<std::size_t>(c)] = running_mean[c];
            invstd_[static_cast<std::size_t>(c)] = 1.0 / std::sqrt(running_var[c] + eps_);
        }
    }

    Tensor y(x.shape());
    parallel_for(n, [&](std::int64_t begin, std::int64_t end, int) {
        for (std::int64_t i = begin; i < end; ++i) {
            for (std::int64_t c = 0; c < channels_; ++c) {
                const Real mu = mean_[static_cast<std::size_t>(c)];
                const Real is = invstd_[static_cast<std::size_t>(c)];
                const Real g = gamma.value[c], b = beta.value[c];
                const Real* px = x.data() + (i * channels_ + c) * s;
                Real* py = y.data() + (i * channels_ + c) * s;
                for (std::int64_t k = 0; k < s; ++k) py[k] = (px[k] - mu) * is * g + b;
            }
        }
    });
    return y;
}

Tensor BatchNorm::backward(const Tensor& gy) {
    const std::int64_t n = gy.dim(0), s = gy.dim(2) * gy.dim(3);
    const std::int64_t m = n * s;
    Tensor gx(gy.shape());

    if (!trained_forward_) {
        // eval mode: per-element affine with frozen stats
        parallel_for(n, [&](std::int64_t begin, std::int64_t end, int) {
            for (std::int64_t i = begin; i < end; ++i)
                for (std::int64_t c = 0; c < channels_; ++c) {
                    const Real k = gamma.value[c] * invstd_[static_cast<std::size_t>(c)];
                    const Real* pg = gy.data() + (i * channels_ + c) * s;
                    Real* px = gx.data() + (i * channels_ + c) * s;
                    for (std::int64_t j = 0; j < s; ++j) px[j] = pg[j] * k;
                }
        });
        return gx;
    }

    std::vector<Real> dgamma(static_cast<std::size_t>(channels_), 0.0);
    std::vector<Real> dbeta(static_cast<std::size_t>(channels_), 0.0);
    parallel_for(channels_, [&](std::int64_t begin, std::int64_t end, int) {
        for (std::int64_t c = begin; c < end; ++c) {
            const Real mu = mean_[static_cast<std::size_t>(c)];
            const Real is = invstd_[static_cast<std::size_t>(c)];
            Real dg = 0, db = 0;
            for (std::int64_t i = 0; i < n; ++i) {
                const Real* px = x_.data() + (i * channels_ + c) * s;
                const Real* pg = gy.data() + (i * channels_ + c) * s;
                for (std::int64_t k = 0; k < s; ++k) {
                    dg += pg[k] * (px[k] - mu) * is;
                    db += pg[k];
                }
            }
            dgamma[static_cast<std::size_t>(c)] = dg;
            dbeta[static_cast<std::size_t>(c)] = db;
        }
    });
    for (int c = 0; c < channels_; ++c) {
        gamma.grad[c] += dgamma[static_cast<std::size_t>(c)];
        beta.grad[c] += dbeta[static_cast<std::size_t>(c)];
    }

    parallel_for(n, [&](std::int64_t begin, std::int64_t end, int) {
        for (std::int64_t i = begin; i < end; ++i)
            for (std::int64_t c = 0; c < channels_; ++c) {
                const Real mu = mean_[static_cast<std::size_t>(c)];
                const Real is = invstd_[static_cast<std::size_t>(c)];
                const Real g = gamma.value[c];
                const Real dg_m = dgamma[static_cast<std::size_t>(c)] / static_cast<Real>(m);
                const Real db_m = dbeta[static_cast<std::size_t>(c)] / static_cast<Real>(m);
                const Real* px = x_.data() + (i * channels_ + c) * s;
                const Real* pg = gy.data() + (i * channels_ + c) * s;
                Real* pd = gx.data() + (i * channels_ + c) * s;
                for (std::int64_t k = 0; k < s; ++k) {
                    const Real xhat = (px[k] - mu) * is;
                    pd[k] = g * is * (pg[k] - db_m - xhat * dg_m);
                }
            }
    });
    x_ = Tensor();
    return gx;
}

// ------------------------------------------------------------------- ReLU

Tensor ReLU::forward(Tensor x) {
    mask_.resize(static_cast<std::size_t>(x.numel()));
    Real* p = x.data();
    for (std::int64_t i = 0; i < x.numel(); ++i) {
        const bool pos = p[i] > 0;
        mask_[static_cast<std::size_t>(i)] = pos;
        if (!pos) p[i] = 0;
    }
    return x;
}

Tensor ReLU::backward(const Tensor& gy) {
    Tensor gx(gy.shape());
    const Real* pg = gy.data();
    Real* px = gx.data();
    for (std::int64_t i = 0; i < gy.numel(); ++i)
        px[i] = mask_[static_cast<std::size_t>(i)] ? pg[i] : 0;
    return gx;
}

// ----------------------------------------------------------------- Linear

Linear::Linear(std::string name, int in_dim, int out_dim, Rng& rng, bool bias_enabled)
    : in_dim_(in_dim), out_dim_(out_dim), has_bias_(bias_enabled) {
    weight = Parameter(name + ".weight", Tensor({out_dim, in_dim}));
    init_uniform_fan_in(weight.value, in_dim, rng);
    if (has_bias_) {
        bias = Parameter(name + ".bias", Tensor({out_dim}));
        init_uniform_fan_in(bias.value, in_dim, rng);
    }
}

void Linear::params(ParamRefs& out) {
    out.push_back(&weight);
    if (has_bias_) out.push_back(&bias);
}

Tensor Linear::forward(const Tensor& x) {
    if (x.dim(x.ndim() - 1) != in_dim_)
        throw ShapeMismatch("Linear " + weight.name + ": input " + x.shape_str());
    x_ = x;
    const std::int64_t rows = x.numel() / in_dim_;
    auto shape = x.shape();
    shape.back() = out_dim_;
    Tensor y(std::move(shape));
    gemm_bt(x.data(), weight.value.data(), y.data(), rows, in_dim_, out_dim_, false);
    if (has_bias_) {
        Real* py = y.data();
        for (std::int64_t r = 0; r < rows; ++r)
            for (int c = 0; c < out_dim_; ++c) py[r * out_dim_ + c] += bias.value[c];
    }
    return y;
}

Tensor Linear::backward(const Tensor& gy) {
    const std::int64_t rows = gy.numel() / out_dim_;
    // dW = gy^T * x
    gemm_at(gy.data(), x_.data(), weight.grad.data(), out_dim_, rows, in_dim_, true);
    if (has_bias_) {
        const Real* pg = gy.data();
        for (std::int64_t r = 0; r < rows; ++r)
            for (int c = 0; c < out_dim_; ++c) bias.grad[c] += pg[r * out_dim_ + c];
    }
    Tensor gx(x_.shape());
    gemm(gy.data(), weight.value.data(), gx.data(), rows, out_dim_, in_dim_, false);
    x_ = Tensor();
    return gx;
}

// ----------------------------------------------------------------- SEUnit

SEUnit::SEUnit(std::string name, int channels, int reduction, Rng& rng)
    : fc1(name + ".fc1", channels, std::max(1, channels / reduction), rng),
      fc2(name + ".fc2", std::max(1, channels / reduction), channels, rng),
      channels_(channels), bottleneck_(std::max(1, channels / reduction)) {}

void SEUnit::params(ParamRefs& out) {
    fc1.params(out);
    fc2.params(out);
}

Tensor SEUnit::forward(const Tensor& x) {
    if (x.ndim() != 4 || x.dim(1) != channels_)
        throw ShapeMismatch("SEUnit " + fc1.weight.name + ": input " + x.shape_str());
    x_ = x;
    const std::int64_t n = x.dim(0), s = x.dim(2) * x.dim(3);

    squeezed_ = Tensor({n, channels_});
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t c = 0; c < channels_; ++c) {
            const Real* p = x.data() + (i * channels_ + c) * s;
            Real sum = 0;
            for (std::int64_t k = 0; k < s; ++k) sum += p[k];
            squeezed_[i * channels_ + c] = sum / static_cast<Real>(s);
        }

    hidden_ = fc1.forward(squeezed_);
    hidden_mask_.resize(static_cast<std::size_t>(hidden_.numel()));
    for (std::int64_t i = 0; i < hidden_.numel(); ++i) {
        const bool pos = hidden_[i] > 0;
        hidden_mask_[static_cast<std::size_t>(i)] = pos;
        if (!pos) hidden_[i] = 0;
    }
    gate_ = fc2.forward(hidden_);
    for (std::int64_t i = 0; i < gate_.numel(); ++i)
        gate_[i] = 1.0 / (1.0 + std::exp(-gate_[i]));

    Tensor y(x.shape());
    parallel_for(n, [&](std::int64_t begin, std::int64_t end, int) {
        for (std::int64_t i = begin; i < end; ++i)
            for (std::int64_t c = 0; c < channels_; ++c) {
                const Real g = gate_[i * channels_ + c];
                const Real* px = x.data() + (i * channels_ + c) * s;
                Real* py = y.data() + (i * channels_ + c) * s;
                for (std::int64_t k = 0; k < s; ++k) py[k] = px[k] * g;
            }
    });
    return y;
}

Tensor SEUnit::backward(const Tensor& gy) {
    const std::int64_t n = x_.dim(0), s = x_.dim(2) * x_.dim(3);

    Tensor dgate({n, channels_});
    Tensor gx(x_.shape());
    parallel_for(n, [&](std::int64_t begin, std::int64_t end, int) {
        for (std::int64_t i = begin; i < end; ++i)
            for (std::int64_t c = 0; c < channels_; ++c) {
                const Real g = gate_[i * channels_ + c];
                const Real* px = x_.data() + (i * channels_ + c) * s;
                const Real* pg = gy.data() + (i * channels_ + c) * s;
                Real* pd = gx.data() + (i * channels_ + c) * s;
                Real acc = 0;
                for (std::int64_t k = 0; k < s; ++k) {
                    pd[k] = pg[k] * g;
                    acc += pg[k] * px[k];
                }
                dgate[i * channels_ + c] = acc;
            }
    });

    // through sigmoid, fc2, relu, fc1
    for (std::int64_t i = 0; i < dgate.numel(); ++i) {
        const Real g = gate_[i];
        dgate[i] *= g * (1 - g);
    }
    Tensor dhidden = fc2.backward(dgate);
    for (std::int64_t i = 0; i < dhidden.numel(); ++i)
        if (!hidden_mask_[static_cast<std::size_t>(i)]) dhidden[i] = 0;
    Tensor dsqueezed = fc1.backward(dhidden);

    const Real inv_s = 1.0 / static_cast<Real>(s);
    parallel_for(n, [&](std::int64_t begin, std::int64_t end, int) {
        for (std::int64_t i = begin; i < end; ++i)
            for (std::int64_t c = 0; c < channels_; ++c) {
                const Real d = dsqueezed[i * channels_ + c] * inv_s;
                Real* pd = gx.data() + (i * channels_ + c) * s;
                for (std::int64_t k = 0; k < s; ++k) pd[k] += d;
            }
    });
    x_ = Tensor();
    return gx;
}

// -------------------------------------------------------- SpatialAvgPool

Tensor SpatialAvgPool::forward(const Tensor& x) {
    n_ = x.dim(0);
    c_ = x.dim(1);
    h_ = x.dim(2);
    w_ = x.dim(3);
    const std::int64_t s = h_ * w_;
    Tensor y({n_, c_});
    for (std::int64_t i = 0; i < n_; ++i)
        for (std::int64_t c = 0; c < c_; ++c) {
            const Real* p = x.data() + (i * c_ + c) * s;
            Real sum = 0;
            for (std::int64_t k = 0; k < s; ++k) sum += p[k];
            y[i * c_ + c] = sum / static_cast<Real>(s);
        }
    return y;
}

Tensor SpatialAvgPool::backward(const Tensor& gy) {
    const std::int64_t s = h_ * w_;
    Tensor gx({n_, c_, h_, w_});
    const Real inv = 1.0 / static_cast<Real>(s);
    for (std::int64_t i = 0; i < n_; ++i)
        for (std::int64_t c = 0; c < c_; ++c) {
            const Real d = gy[i * c_ + c] * inv;
            Real* p = gx.data() + (i * c_ + c) * s;
            for (std::int64_t k = 0; k < s; ++k) p[k] = d;
        }
    return gx;
}

}  // namespace asdnb::nn
