#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "asdnb/tensor.hpp"

namespace asdnb::nn {

using Rng = std::mt19937_64;

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {
        grad = Tensor::zeros(value.shape());
    }
    void zero_grad() { grad.zero(); }
};

using ParamRefs = std::vector<Parameter*>;
// Named persistent state beyond trainable parameters (batch-norm running
// statistics); saved in checkpoints, ignored by the optimizer.
using StateRefs = std::vector<std::pair<std::string, Tensor*>>;

inline std::int64_t count_parameters(const ParamRefs& params) {
    std::int64_t n = 0;
    for (const auto* p : params) n += p->value.numel();
    return n;
}

inline void zero_grads(const ParamRefs& params) {
    for (auto* p : params) p->zero_grad();
}

// torch-style default init: uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))
inline void init_uniform_fan_in(Tensor& t, std::int64_t fan_in, Rng& rng) {
    const Real bound = 1.0 / std::sqrt(static_cast<Real>(fan_in));
    std::uniform_real_distribution<Real> dist(-bound, bound);
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = dist(rng);
}

}  // namespace asdnb::nn
