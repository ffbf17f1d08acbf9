#pragma once

#include <vector>

#include "asdnb/common.hpp"
#include "asdnb/tensor.hpp"

namespace asdnb {

// Epoch-indexed weight pair (alpha, 1-alpha) shifting emphasis from the
// visual-only head to the combined head across training.
struct LossWeights {
    static constexpr Real kAlpha0 = 0.5;
    static constexpr Real kDelta = 1.0 / 60.0;

    Real alpha = kAlpha0;
    int epoch = 1;
};

inline constexpr Real kProbClamp = 1e-7;

// alpha(eps) = min(1, 0.5 + (eps-1)/60); throws BadEpoch for epoch < 1.
Real alpha_at(int epoch);
LossWeights loss_weights_at(int epoch);

// Mean binary cross-entropy over one clip; probabilities are clamped to
// [1e-7, 1-1e-7]. Throws EmptySequence on T=0, LengthMismatch otherwise.
Real frame_ce(const std::vector<Real>& probs, const std::vector<int>& labels);

struct TotalLoss {
    Real value = 0;
    Real loss_av = 0;
    Real loss_v = 0;
    Real alpha = 0;
};

// alpha * CE(sigmoid(logits_av), y) + (1-alpha) * CE(sigmoid(logits_v), y).
TotalLoss total_loss(const std::vector<Real>& logits_av, const std::vector<Real>& logits_v,
                     const std::vector<int>& labels, int epoch);

// Batched variant over [B,T] tensors, averaging per-clip losses across the
// batch. Fills logit gradients when requested (d loss / d logit =
// weight * (sigmoid(logit) - y) / (T*B), zero where the clamp is active).
struct BatchLoss {
    Real value = 0;
    Real loss_av = 0;
    Real loss_v = 0;
    Real alpha = 0;
    Tensor g_av, g_v;  // [B,T]
};

BatchLoss total_loss_batch(const Tensor& logits_av, const Tensor& logits_v, const Tensor& labels,
                           int epoch, bool with_grad);

}  // namespace asdnb
