#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "asdnb/nn/layers.hpp"
#include "asdnb/nn/recurrent.hpp"
#include "asdnb/threading.hpp"

using namespace asdnb;
using nn::Parameter;

namespace {

std::mt19937_64& test_rng() {
    static std::mt19937_64 rng(12345);
    return rng;
}

Tensor randn(std::vector<std::int64_t> shape, Real scale = 1.0) {
    Tensor t(std::move(shape));
    std::normal_distribution<Real> d(0, scale);
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = d(test_rng());
    return t;
}

Real dot(const Tensor& a, const Tensor& b) {
    Real s = 0;
    for (std::int64_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
    return s;
}

Real rel_err(Real a, Real b) {
    return std::abs(a - b) / std::max(1e-6, std::abs(a) + std::abs(b));
}

// Checks d(dot(c, f(x)))/dx and /dparams against central differences on a
// sampled subset of coordinates.
void grad_check(const std::function<Tensor()>& forward, Tensor& x,
                const std::function<Tensor(const Tensor&)>& backward,
                const std::vector<Parameter*>& params, Real tol, int samples = 12) {
    Tensor y0 = forward();
    const Tensor c = randn(y0.shape());
    for (Parameter* p : params) p->grad.zero();
    const Tensor gx = backward(c);

    const Real h = 1e-5;
    auto loss = [&]() { return dot(c, forward()); };

    for (int s = 0; s < samples; ++s) {
        const std::int64_t i = static_cast<std::int64_t>(test_rng()() % static_cast<std::uint64_t>(x.numel()));
        const Real saved = x[i];
        x[i] = saved + h;
        const Real up = loss();
        x[i] = saved - h;
        const Real dn = loss();
        x[i] = saved;
        CHECK(rel_err((up - dn) / (2 * h), gx[i]) < tol);
    }
    for (Parameter* p : params) {
        for (int s = 0; s < samples / 2 + 1; ++s) {
            const std::int64_t i = static_cast<std::int64_t>(test_rng()() % static_cast<std::uint64_t>(p->value.numel()));
            const Real saved = p->value[i];
            p->value[i] = saved + h;
            const Real up = loss();
            p->value[i] = saved - h;
            const Real dn = loss();
            p->value[i] = saved;
            CHECK(rel_err((up - dn) / (2 * h), p->grad[i]) < tol);
        }
    }
}

}  // namespace

TEST_CASE("gemm helpers agree with naive loops") {
    const Tensor a = randn({3, 4}), b = randn({4, 5});
    Tensor c({3, 5});
    nn::gemm(a.data(), b.data(), c.data(), 3, 4, 5, false);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 5; ++j) {
            Real s = 0;
            for (int k = 0; k < 4; ++k) s += a[i * 4 + k] * b[k * 5 + j];
            CHECK(c[i * 5 + j] == doctest::Approx(s).epsilon(1e-12));
        }
    Tensor at({4, 3});
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 4; ++k) at[k * 3 + i] = a[i * 4 + k];
    Tensor c2({3, 5});
    nn::gemm_at(at.data(), b.data(), c2.data(), 3, 4, 5, false);
    for (std::int64_t i = 0; i < 15; ++i) CHECK(c2[i] == doctest::Approx(c[i]).epsilon(1e-12));
    Tensor bt({5, 4});
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j < 5; ++j) bt[j * 4 + k] = b[k * 5 + j];
    Tensor c3({3, 5});
    nn::gemm_bt(a.data(), bt.data(), c3.data(), 3, 4, 5, false);
    for (std::int64_t i = 0; i < 15; ++i) CHECK(c3[i] == doctest::Approx(c[i]).epsilon(1e-12));
}

TEST_CASE("conv2d gradients (stride 1 and 2, kernels 3 and 5)") {
    set_num_threads(1);
    for (auto [k, stride] : {std::pair{3, 1}, {3, 2}, {5, 1}, {5, 2}}) {
        nn::Rng rng(7);
        nn::Conv2d conv("conv", 3, 4, k, stride, (k - 1) / 2, rng, true);
        Tensor x = randn({2, 3, 9, 9});
        std::vector<Parameter*> params;
        conv.params(params);
        grad_check([&] { return conv.forward(x); }, x,
                   [&](const Tensor& c) { conv.forward(x); return conv.backward(c); }, params, 1e-6);
    }
}

TEST_CASE("conv2d output matches a naive convolution") {
    nn::Rng rng(3);
    nn::Conv2d conv("conv", 2, 3, 3, 2, 1, rng);
    Tensor x = randn({1, 2, 7, 7});
    const Tensor y = conv.forward(x);
    REQUIRE(y.shape() == std::vector<std::int64_t>{1, 3, 4, 4});
    for (int co = 0; co < 3; ++co)
        for (int oh = 0; oh < 4; ++oh)
            for (int ow = 0; ow < 4; ++ow) {
                Real s = 0;
                for (int ci = 0; ci < 2; ++ci)
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx) {
                            const int ih = oh * 2 - 1 + ky, iw = ow * 2 - 1 + kx;
                            if (ih < 0 || ih >= 7 || iw < 0 || iw >= 7) continue;
                            s += conv.weight.value[(co * 2 + ci) * 9 + ky * 3 + kx] *
                                 x[(ci * 7 + ih) * 7 + iw];
                        }
                CHECK(y[(co * 4 + oh) * 4 + ow] == doctest::Approx(s).epsilon(1e-10));
            }
}

TEST_CASE("temporal conv keeps T, stays within clips, and backprops") {
    set_num_threads(1);
    for (int k : {3, 5}) {
        nn::Rng rng(11);
        nn::TemporalConv1d conv("tconv", 3, 4, k, rng);
        Tensor x = randn({2 * 5, 3, 2, 3});  // B=2, T=5
        std::vector<Parameter*> params;
        conv.params(params);
        grad_check([&] { return conv.forward(x, 2, 5); }, x,
                   [&](const Tensor& c) { conv.forward(x, 2, 5); return conv.backward(c); }, params,
                   1e-6);
    }

    // clip isolation: changing clip 0 never changes clip 1 outputs
    nn::Rng rng(13);
    nn::TemporalConv1d conv("tconv", 2, 2, 5, rng);
    Tensor x = randn({2 * 4, 2, 2, 2});
    const Tensor y1 = conv.forward(x, 2, 4);
    for (std::int64_t i = 0; i < 4 * 2 * 2 * 2; ++i) x[i] += 1.0;  // perturb clip 0 only
    const Tensor y2 = conv.forward(x, 2, 4);
    for (std::int64_t i = 4 * 2 * 2 * 2; i < y1.numel(); ++i) CHECK(y1[i] == y2[i]);
}

TEST_CASE("batch norm gradients in training mode") {
    set_num_threads(1);
    nn::BatchNorm bn("bn", 3);
    Tensor x = randn({4, 3, 2, 3});
    std::vector<Parameter*> params;
    bn.params(params);
    grad_check([&] { return bn.forward(x, true); }, x,
               [&](const Tensor& c) { bn.forward(x, true); return bn.backward(c); }, params, 1e-5);
}

TEST_CASE("batch norm normalizes per channel and tracks running stats") {
    nn::BatchNorm bn("bn", 2);
    Tensor x = randn({8, 2, 3, 3}, 2.5);
    for (std::int64_t i = 0; i < x.numel(); ++i) x[i] += 1.0;
    const Tensor y = bn.forward(x, true);
    for (int c = 0; c < 2; ++c) {
        Real mean = 0, var = 0;
        std::int64_t count = 0;
        for (std::int64_t n = 0; n < 8; ++n)
            for (std::int64_t s = 0; s < 9; ++s) {
                mean += y[(n * 2 + c) * 9 + s];
                ++count;
            }
        mean /= static_cast<Real>(count);
        for (std::int64_t n = 0; n < 8; ++n)
            for (std::int64_t s = 0; s < 9; ++s) {
                const Real d = y[(n * 2 + c) * 9 + s] - mean;
                var += d * d;
            }
        var /= static_cast<Real>(count);
        CHECK(std::abs(mean) < 1e-10);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
        CHECK(bn.running_mean[c] != 0.0);
    }
    // eval mode uses the running stats (different output than train mode)
    const Tensor ye = bn.forward(x, false);
    CHECK(ye.all_finite());
}

TEST_CASE("linear gradients") {
    nn::Rng rng(17);
    nn::Linear lin("lin", 5, 3, rng);
    Tensor x = randn({4, 5});
    std::vector<Parameter*> params;
    lin.params(params);
    grad_check([&] { return lin.forward(x); }, x,
               [&](const Tensor& c) { lin.forward(x); return lin.backward(c); }, params, 1e-6);
}

TEST_CASE("SE unit gradients") {
    set_num_threads(1);
    nn::Rng rng(19);
    nn::SEUnit se("se", 8, 4, rng);
    Tensor x = randn({3, 8, 2, 2});
    std::vector<Parameter*> params;
    se.params(params);
    grad_check([&] { return se.forward(x); }, x,
               [&](const Tensor& c) { se.forward(x); return se.backward(c); }, params, 1e-4);
}

TEST_CASE("spatial average pool gradients") {
    nn::SpatialAvgPool pool;
    Tensor x = randn({2, 3, 4, 5});
    grad_check([&] { return pool.forward(x); }, x,
               [&](const Tensor& c) { pool.forward(x); return pool.backward(c); }, {}, 1e-6);
}

TEST_CASE("GRU gradients, both directions") {
    for (bool bidir : {false, true}) {
        nn::Rng rng(23);
        nn::GRU gru("gru", 4, 5, bidir, rng);
        Tensor x = randn({2, 6, 4});
        std::vector<Parameter*> params;
        gru.params(params);
        grad_check([&] { return gru.forward(x); }, x,
                   [&](const Tensor& c) { gru.forward(x); return gru.backward(c); }, params, 1e-6);
    }
}

TEST_CASE("LSTM gradients, both directions") {
    for (bool bidir : {false, true}) {
        nn::Rng rng(29);
        nn::LSTM lstm("lstm", 4, 5, bidir, rng);
        Tensor x = randn({2, 6, 4});
        std::vector<Parameter*> params;
        lstm.params(params);
        grad_check([&] { return lstm.forward(x); }, x,
                   [&](const Tensor& c) { lstm.forward(x); return lstm.backward(c); }, params, 1e-6);
    }
}

TEST_CASE("identical seeds give identical weights and outputs") {
    nn::Rng rng_a(31), rng_b(31);
    nn::Conv2d conv_a("c", 2, 4, 3, 1, 1, rng_a);
    nn::Conv2d conv_b("c", 2, 4, 3, 1, 1, rng_b);
    for (std::int64_t i = 0; i < conv_a.weight.value.numel(); ++i)
        CHECK(conv_a.weight.value[i] == conv_b.weight.value[i]);
    Tensor x = randn({2, 2, 5, 5});
    const Tensor ya = conv_a.forward(x);
    const Tensor yb = conv_b.forward(x);
    for (std::int64_t i = 0; i < ya.numel(); ++i) CHECK(ya[i] == yb[i]);
}

TEST_CASE("threaded conv forward is bitwise identical to single-threaded") {
    nn::Rng rng(37);
    nn::Conv2d conv("c", 3, 8, 5, 2, 2, rng);
    Tensor x = randn({7, 3, 16, 16});
    set_num_threads(1);
    const Tensor y1 = conv.forward(x);
    set_num_threads(3);
    const Tensor y3 = conv.forward(x);
    set_num_threads(1);
    for (std::int64_t i = 0; i < y1.numel(); ++i) CHECK(y1[i] == y3[i]);
}
