#include "asdnb/nn/recurrent.hpp"

#include <cmath>

#include "asdnb/errors.hpp"
#include "asdnb/nn/layers.hpp"

namespace asdnb::nn {

namespace {

inline Real sigmoid(Real v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

// --------------------------------------------------------------------- GRU

GRU::GRU(std::string name, int input_dim, int hidden, bool bidirectional, Rng& rng)
    : input_dim_(input_dim), hidden_(hidden), bidirectional_(bidirectional) {
    const int ndirs = bidirectional ? 2 : 1;
    dirs_.resize(static_cast<std::size_t>(ndirs));
    for (int d = 0; d < ndirs; ++d) {
        const std::string p = name + (d == 0 ? ".fwd" : ".bwd");
        Direction& dir = dirs_[static_cast<std::size_t>(d)];
        dir.w_ih = Parameter(p + ".w_ih", Tensor({3 * hidden, input_dim}));
        dir.w_hh = Parameter(p + ".w_hh", Tensor({3 * hidden, hidden}));
        dir.b_ih = Parameter(p + ".b_ih", Tensor({3 * hidden}));
        dir.b_hh = Parameter(p + ".b_hh", Tensor({3 * hidden}));
        for (Parameter* w : {&dir.w_ih, &dir.w_hh, &dir.b_ih, &dir.b_hh})
            init_uniform_fan_in(w->value, hidden, rng);
    }
}

void GRU::params(ParamRefs& out) {
    for (auto& d : dirs_) {
        out.push_back(&d.w_ih);
        out.push_back(&d.w_hh);
        out.push_back(&d.b_ih);
        out.push_back(&d.b_hh);
    }
}

void GRU::run_direction(Direction& d, const Tensor& x, bool reverse, Tensor& y, int dir_index) {
    const std::int64_t b = x.dim(0), t_len = x.dim(1);
    const int h = hidden_;
    d.r = Tensor({b, t_len, h});
    d.z = Tensor({b, t_len, h});
    d.n = Tensor({b, t_len, h});
    d.u = Tensor({b, t_len, h});
    d.h = Tensor({b, t_len, h});

    std::vector<Real> gi(static_cast<std::size_t>(b * 3 * h));
    std::vector<Real> gh(static_cast<std::size_t>(b * 3 * h));
    std::vector<Real> h_prev(static_cast<std::size_t>(b * h), 0.0);
    std::vector<Real> x_t(static_cast<std::size_t>(b * input_dim_));

    for (std::int64_t step = 0; step < t_len; ++step) {
        const std::int64_t t = reverse ? t_len - 1 - step : step;
        for (std::int64_t i = 0; i < b; ++i)
            std::copy(x.data() + (i * t_len + t) * input_dim_,
                      x.data() + (i * t_len + t + 1) * input_dim_, x_t.data() + i * input_dim_);

        gemm_bt(x_t.data(), d.w_ih.value.data(), gi.data(), b, input_dim_, 3 * h, false);
        gemm_bt(h_prev.data(), d.w_hh.value.data(), gh.data(), b, h, 3 * h, false);

        for (std::int64_t i = 0; i < b; ++i) {
            const std::int64_t base = (i * t_len + t) * h;
            for (int j = 0; j < h; ++j) {
                const std::int64_t gbase = i * 3 * h;
                const Real ir = gi[static_cast<std::size_t>(gbase + j)] + d.b_ih.value[j] +
                                gh[static_cast<std::size_t>(gbase + j)] + d.b_hh.value[j];
                const Real iz = gi[static_cast<std::size_t>(gbase + h + j)] + d.b_ih.value[h + j] +
                                gh[static_cast<std::size_t>(gbase + h + j)] + d.b_hh.value[h + j];
                const Real un = gh[static_cast<std::size_t>(gbase + 2 * h + j)] + d.b_hh.value[2 * h + j];
                const Real r = sigmoid(ir);
                const Real z = sigmoid(iz);
                const Real n = std::tanh(gi[static_cast<std::size_t>(gbase + 2 * h + j)] +
                                         d.b_ih.value[2 * h + j] + r * un);
                const Real hp = h_prev[static_cast<std::size_t>(i * h + j)];
                const Real hv = (1 - z) * n + z * hp;
                d.r[base + j] = r;
                d.z[base + j] = z;
                d.n[base + j] = n;
                d.u[base + j] = un;
                d.h[base + j] = hv;
                h_prev[static_cast<std::size_t>(i * h + j)] = hv;
            }
        }
    }

    const int out_dim = output_dim();
    for (std::int64_t i = 0; i < b; ++i)
        for (std::int64_t t = 0; t < t_len; ++t)
            for (int j = 0; j < h; ++j)
                y[(i * t_len + t) * out_dim + dir_index * h + j] = d.h[(i * t_len + t) * h + j];
}

Tensor GRU::forward(const Tensor& x) {
    if (x.ndim() != 3 || x.dim(2) != input_dim_)
        throw ShapeMismatch("GRU: input " + x.shape_str());
    x_ = x;
    Tensor y({x.dim(0), x.dim(1), output_dim()});
    for (std::size_t d = 0; d < dirs_.size(); ++d)
        run_direction(dirs_[d], x, d == 1, y, static_cast<int>(d));
    return y;
}

Tensor GRU::backward_direction(Direction& d, const Tensor& gy, bool reverse, int dir_index) {
    const std::int64_t b = x_.dim(0), t_len = x_.dim(1);
    const int h = hidden_;
    const int out_dim = output_dim();
    Tensor gx = Tensor::zeros(x_.shape());

    std::vector<Real> dh(static_cast<std::size_t>(b * h), 0.0);
    std::vector<Real> dgi(static_cast<std::size_t>(b * 3 * h));
    std::vector<Real> dgh(static_cast<std::size_t>(b * 3 * h));
    std::vector<Real> x_t(static_cast<std::size_t>(b * input_dim_));
    std::vector<Real> hp_t(static_cast<std::size_t>(b * h));
    std::vector<Real> dx_t(static_cast<std::size_t>(b * input_dim_));
    std::vector<Real> dhp(static_cast<std::size_t>(b * h));

    for (std::int64_t step = t_len - 1; step >= 0; --step) {
        const std::int64_t t = reverse ? t_len - 1 - step : step;
        const std::int64_t t_prev = reverse ? t + 1 : t - 1;
        const bool has_prev = step > 0;

        for (std::int64_t i = 0; i < b; ++i) {
            std::copy(x_.data() + (i * t_len + t) * input_dim_,
                      x_.data() + (i * t_len + t + 1) * input_dim_, x_t.data() + i * input_dim_);
            for (int j = 0; j < h; ++j)
                hp_t[static_cast<std::size_t>(i * h + j)] =
                    has_prev ? d.h[(i * t_len + t_prev) * h + j] : 0.0;
        }

        for (std::int64_t i = 0; i < b; ++i) {
            for (int j = 0; j < h; ++j) {
                const std::int64_t base = (i * t_len + t) * h;
                const Real r = d.r[base + j], z = d.z[base + j], n = d.n[base + j], u = d.u[base + j];
                const Real hp = hp_t[static_cast<std::size_t>(i * h + j)];
                const Real dh_total = gy[(i * t_len + t) * out_dim + dir_index * h + j] +
                                      dh[static_cast<std::size_t>(i * h + j)];
                const Real dn = dh_total * (1 - z);
                const Real dz = dh_total * (hp - n);
                const Real dan = dn * (1 - n * n);
                const Real dr = dan * u;
                const Real du = dan * r;
                const Real dar = dr * r * (1 - r);
                const Real daz = dz * z * (1 - z);
                const std::int64_t gbase = i * 3 * h;
                dgi[static_cast<std::size_t>(gbase + j)] = dar;
                dgi[static_cast<std::size_t>(gbase + h + j)] = daz;
                dgi[static_cast<std::size_t>(gbase + 2 * h + j)] = dan;
                dgh[static_cast<std::size_t>(gbase + j)] = dar;
                dgh[static_cast<std::size_t>(gbase + h + j)] = daz;
                dgh[static_cast<std::size_t>(gbase + 2 * h + j)] = du;
                dh[static_cast<std::size_t>(i * h + j)] = dh_total * z;  // plus W_hh term below
            }
        }

        // parameter gradients
        gemm_at(dgi.data(), x_t.data(), d.w_ih.grad.data(), 3 * h, b, input_dim_, true);
        gemm_at(dgh.data(), hp_t.data(), d.w_hh.grad.data(), 3 * h, b, h, true);
        for (std::int64_t i = 0; i < b; ++i)
            for (int j = 0; j < 3 * h; ++j) {
                d.b_ih.grad[j] += dgi[static_cast<std::size_t>(i * 3 * h + j)];
                d.b_hh.grad[j] += dgh[static_cast<std::size_t>(i * 3 * h + j)];
            }

        // input and carried hidden gradients
        gemm(dgi.data(), d.w_ih.value.data(), dx_t.data(), b, 3 * h, input_dim_, false);
        gemm(dgh.data(), d.w_hh.value.data(), dhp.data(), b, 3 * h, h, false);
        for (std::int64_t i = 0; i < b; ++i) {
            for (int k = 0; k < input_dim_; ++k)
                gx[(i * t_len + t) * input_dim_ + k] += dx_t[static_cast<std::size_t>(i * input_dim_ + k)];
            for (int j = 0; j < h; ++j)
                dh[static_cast<std::size_t>(i * h + j)] += dhp[static_cast<std::size_t>(i * h + j)];
        }
    }
    return gx;
}

Tensor GRU::backward(const Tensor& gy) {
    Tensor gx = Tensor::zeros(x_.shape());
    for (std::size_t d = 0; d < dirs_.size(); ++d)
        gx.add_(backward_direction(dirs_[d], gy, d == 1, static_cast<int>(d)));
    x_ = Tensor();
    return gx;
}

// -------------------------------------------------------------------- LSTM

LSTM::LSTM(std::string name, int input_dim, int hidden, bool bidirectional, Rng& rng)
    : input_dim_(input_dim), hidden_(hidden), bidirectional_(bidirectional) {
    const int ndirs = bidirectional ? 2 : 1;
    dirs_.resize(static_cast<std::size_t>(ndirs));
    for (int d = 0; d < ndirs; ++d) {
        const std::string p = name + (d == 0 ? ".fwd" : ".bwd");
        Direction& dir = dirs_[static_cast<std::size_t>(d)];
        dir.w_ih = Parameter(p + ".w_ih", Tensor({4 * hidden, input_dim}));
        dir.w_hh = Parameter(p + ".w_hh", Tensor({4 * hidden, hidden}));
        dir.b_ih = Parameter(p + ".b_ih", Tensor({4 * hidden}));
        dir.b_hh = Parameter(p + ".b_hh", Tensor({4 * hidden}));
        for (Parameter* w : {&dir.w_ih, &dir.w_hh, &dir.b_ih, &dir.b_hh})
            init_uniform_fan_in(w->value, hidden, rng);
    }
}

void LSTM::params(ParamRefs& out) {
    for (auto& d : dirs_) {
        out.push_back(&d.w_ih);
        out.push_back(&d.w_hh);
        out.push_back(&d.b_ih);
        out.push_back(&d.b_hh);
    }
}

void LSTM::run_direction(Direction& d, const Tensor& x, bool reverse, Tensor& y, int dir_index) {
    const std::int64_t b = x.dim(0), t_len = x.dim(1);
    const int h = hidden_;
    for (Tensor* t : {&d.i, &d.f, &d.g, &d.o, &d.c, &d.h}) *t = Tensor({b, t_len, h});

    std::vector<Real> gates(static_cast<std::size_t>(b * 4 * h));
    std::vector<Real> gh(static_cast<std::size_t>(b * 4 * h));
    std::vector<Real> h_prev(static_cast<std::size_t>(b * h), 0.0);
    std::vector<Real> c_prev(static_cast<std::size_t>(b * h), 0.0);
    std::vector<Real> x_t(static_cast<std::size_t>(b * input_dim_));

    for (std::int64_t step = 0; step < t_len; ++step) {
        const std::int64_t t = reverse ? t_len - 1 - step : step;
        for (std::int64_t i = 0; i < b; ++i)
            std::copy(x.data() + (i * t_len + t) * input_dim_,
                      x.data() + (i * t_len + t + 1) * input_dim_, x_t.data() + i * input_dim_);
        gemm_bt(x_t.data(), d.w_ih.value.data(), gates.data(), b, input_dim_, 4 * h, false);
        gemm_bt(h_prev.data(), d.w_hh.value.data(), gh.data(), b, h, 4 * h, false);

        for (std::int64_t i = 0; i < b; ++i) {
            const std::int64_t base = (i * t_len + t) * h;
            const std::int64_t gbase = i * 4 * h;
            for (int j = 0; j < h; ++j) {
                const Real ai = gates[static_cast<std::size_t>(gbase + j)] + gh[static_cast<std::size_t>(gbase + j)] +
                                d.b_ih.value[j] + d.b_hh.value[j];
                const Real af = gates[static_cast<std::size_t>(gbase + h + j)] + gh[static_cast<std::size_t>(gbase + h + j)] +
                                d.b_ih.value[h + j] + d.b_hh.value[h + j];
                const Real ag = gates[static_cast<std::size_t>(gbase + 2 * h + j)] +
                                gh[static_cast<std::size_t>(gbase + 2 * h + j)] + d.b_ih.value[2 * h + j] +
                                d.b_hh.value[2 * h + j];
                const Real ao = gates[static_cast<std::size_t>(gbase + 3 * h + j)] +
                                gh[static_cast<std::size_t>(gbase + 3 * h + j)] + d.b_ih.value[3 * h + j] +
                                d.b_hh.value[3 * h + j];
                const Real iv = sigmoid(ai), fv = sigmoid(af), gv = std::tanh(ag), ov = sigmoid(ao);
                const Real cv = fv * c_prev[static_cast<std::size_t>(i * h + j)] + iv * gv;
                const Real hv = ov * std::tanh(cv);
                d.i[base + j] = iv;
                d.f[base + j] = fv;
                d.g[base + j] = gv;
                d.o[base + j] = ov;
                d.c[base + j] = cv;
                d.h[base + j] = hv;
                c_prev[static_cast<std::size_t>(i * h + j)] = cv;
                h_prev[static_cast<std::size_t>(i * h + j)] = hv;
            }
        }
    }

    const int out_dim = output_dim();
    for (std::int64_t i = 0; i < b; ++i)
        for (std::int64_t t = 0; t < t_len; ++t)
            for (int j = 0; j < h; ++j)
                y[(i * t_len + t) * out_dim + dir_index * h + j] = d.h[(i * t_len + t) * h + j];
}

Tensor LSTM::forward(const Tensor& x) {
    if (x.ndim() != 3 || x.dim(2) != input_dim_)
        throw ShapeMismatch("LSTM: input " + x.shape_str());
    x_ = x;
    Tensor y({x.dim(0), x.dim(1), output_dim()});
    for (std::size_t d = 0; d < dirs_.size(); ++d)
        run_direction(dirs_[d], x, d == 1, y, static_cast<int>(d));
    return y;
}

Tensor LSTM::backward_direction(Direction& d, const Tensor& gy, bool reverse, int dir_index) {
    const std::int64_t b = x_.dim(0), t_len = x_.dim(1);
    const int h = hidden_;
    const int out_dim = output_dim();
    Tensor gx = Tensor::zeros(x_.shape());

    std::vector<Real> dh(static_cast<std::size_t>(b * h), 0.0);
    std::vector<Real> dc(static_cast<std::size_t>(b * h), 0.0);
    std::vector<Real> dgates(static_cast<std::size_t>(b * 4 * h));
    std::vector<Real> x_t(static_cast<std::size_t>(b * input_dim_));
    std::vector<Real> hp_t(static_cast<std::size_t>(b * h));
    std::vector<Real> dx_t(static_cast<std::size_t>(b * input_dim_));
    std::vector<Real> dhp(static_cast<std::size_t>(b * h));

    for (std::int64_t step = t_len - 1; step >= 0; --step) {
        const std::int64_t t = reverse ? t_len - 1 - step : step;
        const std::int64_t t_prev = reverse ? t + 1 : t - 1;
        const bool has_prev = step > 0;

        for (std::int64_t i = 0; i < b; ++i) {
            std::copy(x_.data() + (i * t_len + t) * input_dim_,
                      x_.data() + (i * t_len + t + 1) * input_dim_, x_t.data() + i * input_dim_);
            for (int j = 0; j < h; ++j)
                hp_t[static_cast<std::size_t>(i * h + j)] =
                    has_prev ? d.h[(i * t_len + t_prev) * h + j] : 0.0;
        }

        for (std::int64_t i = 0; i < b; ++i) {
            const std::int64_t base = (i * t_len + t) * h;
            const std::int64_t gbase = i * 4 * h;
            for (int j = 0; j < h; ++j) {
                const Real iv = d.i[base + j], fv = d.f[base + j], gv = d.g[base + j],
                           ov = d.o[base + j], cv = d.c[base + j];
                const Real cp = has_prev ? d.c[(i * t_len + t_prev) * h + j] : 0.0;
                const Real tc = std::tanh(cv);
                const Real dh_total = gy[(i * t_len + t) * out_dim + dir_index * h + j] +
                                      dh[static_cast<std::size_t>(i * h + j)];
                Real dcv = dc[static_cast<std::size_t>(i * h + j)] + dh_total * ov * (1 - tc * tc);
                const Real dov = dh_total * tc;
                const Real div = dcv * gv;
                const Real dfv = dcv * cp;
                const Real dgv = dcv * iv;
                dgates[static_cast<std::size_t>(gbase + j)] = div * iv * (1 - iv);
                dgates[static_cast<std::size_t>(gbase + h + j)] = dfv * fv * (1 - fv);
                dgates[static_cast<std::size_t>(gbase + 2 * h + j)] = dgv * (1 - gv * gv);
                dgates[static_cast<std::size_t>(gbase + 3 * h + j)] = dov * ov * (1 - ov);
                dc[static_cast<std::size_t>(i * h + j)] = dcv * fv;
            }
        }

        gemm_at(dgates.data(), x_t.data(), d.w_ih.grad.data(), 4 * h, b, input_dim_, true);
        gemm_at(dgates.data(), hp_t.data(), d.w_hh.grad.data(), 4 * h, b, h, true);
        for (std::int64_t i = 0; i < b; ++i)
            for (int j = 0; j < 4 * h; ++j) {
                d.b_ih.grad[j] += dgates[static_cast<std::size_t>(i * 4 * h + j)];
                d.b_hh.grad[j] += dgates[static_cast<std::size_t>(i * 4 * h + j)];
            }

        gemm(dgates.data(), d.w_ih.value.data(), dx_t.data(), b, 4 * h, input_dim_, false);
        gemm(dgates.data(), d.w_hh.value.data(), dhp.data(), b, 4 * h, h, false);
        for (std::int64_t i = 0; i < b; ++i) {
            for (int k = 0; k < input_dim_; ++k)
                gx[(i * t_len + t) * input_dim_ + k] += dx_t[static_cast<std::size_t>(i * input_dim_ + k)];
            for (int j = 0; j < h; ++j)
                dh[static_cast<std::size_t>(i * h + j)] = dhp[static_cast<std::size_t>(i * h + j)];
        }
    }
    return gx;
}

Tensor LSTM::backward(const Tensor& gy) {
    Tensor gx = Tensor::zeros(x_.shape());
    for (std::size_t d = 0; d < dirs_.size(); ++d)
        gx.add_(backward_direction(dirs_[d], gy, d == 1, static_cast<int>(d)));
    x_ = Tensor();
    return gx;
}

}  // namespace asdnb::nn
