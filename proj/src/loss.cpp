#include "asdnb/loss.hpp"

#include <algorithm>
#include <cmath>

#include "asdnb/errors.hpp"

namespace asdnb {

Real alpha_at(int epoch) {
    if (epoch < 1) throw BadEpoch("epoch " + std::to_string(epoch) + " (must be >= 1)");
    return std::min(1.0, LossWeights::kAlpha0 + LossWeights::kDelta * (epoch - 1));
}

LossWeights loss_weights_at(int epoch) {
    return LossWeights{alpha_at(epoch), epoch};
}

Real frame_ce(const std::vector<Real>& probs, const std::vector<int>& labels) {
    if (probs.empty()) throw EmptySequence("frame_ce on an empty sequence");
    if (probs.size() != labels.size())
        throw LengthMismatch("frame_ce: " + std::to_string(probs.size()) + " probs vs " +
                             std::to_string(labels.size()) + " labels");
    Real sum = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const Real p = std::clamp(probs[i], kProbClamp, 1.0 - kProbClamp);
        sum += labels[i] ? std::log(p) : std::log(1.0 - p);
    }
    return -sum / static_cast<Real>(probs.size());
}

TotalLoss total_loss(const std::vector<Real>& logits_av, const std::vector<Real>& logits_v,
                     const std::vector<int>& labels, int epoch) {
    if (logits_av.size() != logits_v.size() || logits_av.size() != labels.size())
        throw LengthMismatch("total_loss: mismatched sequence lengths");
    const Real alpha = alpha_at(epoch);
    auto to_probs = [](const std::vector<Real>& logits) {
        std::vector<Real> p(logits.size());
        for (std::size_t i = 0; i < logits.size(); ++i) p[i] = 1.0 / (1.0 + std::exp(-logits[i]));
        return p;
    };
    TotalLoss out;
    out.alpha = alpha;
    out.loss_av = frame_ce(to_probs(logits_av), labels);
    out.loss_v = frame_ce(to_probs(logits_v), labels);
    out.value = alpha * out.loss_av + (1 - alpha) * out.loss_v;
    return out;
}

namespace {

// per-head batched CE and gradient; weight folds in alpha and the 1/B average
Real head_loss(const Tensor& logits, const Tensor& labels, Real weight, Tensor* grad) {
    const std::int64_t b = logits.dim(0), t = logits.dim(1);
    Real total = 0;
    for (std::int64_t i = 0; i < b; ++i) {
        Real clip = 0;
        for (std::int64_t k = 0; k < t; ++k) {
            const std::int64_t idx = i * t + k;
            const Real y = labels[idx];
            const Real p_raw = 1.0 / (1.0 + std::exp(-logits[idx]));
            const bool clamped = p_raw < kProbClamp || p_raw > 1.0 - kProbClamp;
            const Real p = std::clamp(p_raw, kProbClamp, 1.0 - kProbClamp);
            clip += y > 0.5 ? std::log(p) : std::log(1.0 - p);
            if (grad)
                (*grad)[idx] = clamped ? 0.0
                                       : weight * (p_raw - y) / static_cast<Real>(t * b);
        }
        total += -clip / static_cast<Real>(t);
    }
    return total / static_cast<Real>(b);
}

}  // namespace

BatchLoss total_loss_batch(const Tensor& logits_av, const Tensor& logits_v, const Tensor& labels,
                           int epoch, bool with_grad) {
    if (!logits_av.same_shape(logits_v) || !logits_av.same_shape(labels))
        throw LengthMismatch("total_loss_batch: mismatched shapes");
    if (logits_av.numel() == 0) throw EmptySequence("total_loss_batch on an empty batch");
    BatchLoss out;
    out.alpha = alpha_at(epoch);
    if (with_grad) {
        out.g_av = Tensor(logits_av.shape());
        out.g_v = Tensor(logits_v.shape());
    }
    out.loss_av = head_loss(logits_av, labels, out.alpha, with_grad ? &out.g_av : nullptr);
    out.loss_v = head_loss(logits_v, labels, 1 - out.alpha, with_grad ? &out.g_v : nullptr);
    out.value = out.alpha * out.loss_av + (1 - out.alpha) * out.loss_v;
    return out;
}

}  // namespace asdnb
