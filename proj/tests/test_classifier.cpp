#include <doctest.h>

#include <cmath>
#include <random>

#include "asdnb/classifier.hpp"
#include "asdnb/errors.hpp"
#include "asdnb/model.hpp"
#include "asdnb/threading.hpp"

using namespace asdnb;

namespace {

Tensor randn(std::vector<std::int64_t> shape, std::uint64_t seed, Real scale = 1.0) {
    Tensor t(std::move(shape));
    std::mt19937_64 rng(seed);
    std::normal_distribution<Real> d(0, scale);
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = d(rng);
    return t;
}

Real grad_norm(const nn::ParamRefs& params) {
    Real s = 0;
    for (const auto* p : params)
        for (std::int64_t i = 0; i < p->grad.numel(); ++i) s += p->grad[i] * p->grad[i];
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("classifier maps a 25x128 sequence to 25 logits") {
    nn::Rng rng(1);
    SequenceClassifier clf("clf", 128, 128, TemporalMode::bidirectional_gru, rng);
    const Tensor logits = clf.forward(randn({1, 25, 128}, 3, 0.2));
    CHECK(logits.shape() == std::vector<std::int64_t>{1, 25});
    CHECK(logits.all_finite());
}

TEST_CASE("unit-length sequences are handled") {
    for (TemporalMode mode : {TemporalMode::bidirectional_gru, TemporalMode::forward_gru,
                              TemporalMode::bidirectional_lstm, TemporalMode::forward_lstm,
                              TemporalMode::none}) {
        nn::Rng rng(2);
        SequenceClassifier clf("clf", 16, 16, mode, rng);
        const Tensor logits = clf.forward(randn({1, 1, 16}, 5));
        CHECK(logits.shape() == std::vector<std::int64_t>{1, 1});
    }
}

TEST_CASE("the backward direction carries frame 0 into the last logit") {
    nn::Rng rng(3);
    SequenceClassifier clf("clf", 16, 16, TemporalMode::bidirectional_gru, rng);
    Tensor x = randn({1, 12, 16}, 7, 0.5);
    const Tensor base = clf.forward(x);
    x[0] += 0.25;  // frame 0, feature 0
    const Tensor moved = clf.forward(x);
    CHECK(std::abs(moved[11] - base[11]) > 0.0);
}

TEST_CASE("bidirectionality: logits depend on both past and future frames") {
    nn::Rng rng(4);
    SequenceClassifier clf("clf", 8, 8, TemporalMode::bidirectional_gru, rng);
    Tensor x = randn({1, 9, 8}, 11, 0.5);
    const Tensor base = clf.forward(x);
    const std::int64_t mid = 4;
    Tensor past = x.clone();
    past[(mid - 2) * 8 + 1] += 0.3;
    Tensor future = x.clone();
    future[(mid + 2) * 8 + 1] += 0.3;
    CHECK(std::abs(clf.forward(past)[mid] - base[mid]) > 0.0);
    CHECK(std::abs(clf.forward(future)[mid] - base[mid]) > 0.0);

    // the forward-only variant must not see the future
    nn::Rng rng2(5);
    SequenceClassifier fwd("clf", 8, 8, TemporalMode::forward_gru, rng2);
    const Tensor fb = fwd.forward(x);
    const Tensor ff = fwd.forward(future);
    CHECK(ff[mid] == fb[mid]);
}

TEST_CASE("constant input yields equal interior logits") {
    nn::Rng rng(6);
    SequenceClassifier clf("clf", 32, 32, TemporalMode::bidirectional_gru, rng);
    const Tensor logits = clf.forward(Tensor::zeros({1, 60, 32}));
    // away from both boundaries the recurrences have converged
    for (std::int64_t t = 26; t <= 34; ++t) CHECK(std::abs(logits[t] - logits[30]) < 1e-6);
}

TEST_CASE("per-frame mode still emits T logits") {
    nn::Rng rng(7);
    SequenceClassifier clf("clf", 16, 16, TemporalMode::none, rng);
    const Tensor logits = clf.forward(randn({2, 7, 16}, 13));
    CHECK(logits.shape() == std::vector<std::int64_t>{2, 7});
    // and is frame-local: editing frame 2 leaves other logits untouched
    Tensor x = randn({1, 5, 16}, 17);
    const Tensor a = clf.forward(x);
    x[2 * 16 + 3] += 1.0;
    const Tensor b = clf.forward(x);
    for (std::int64_t t = 0; t < 5; ++t)
        if (t != 2) CHECK(a[t] == b[t]);
}

TEST_CASE("main head parameter budget matches the ablation table") {
    nn::Rng rng(8);
    SequenceClassifier bigru("clf", 128, 128, TemporalMode::bidirectional_gru, rng);
    const std::int64_t n = bigru.num_parameters();
    CHECK(n == 198401);
    CHECK(n >= 150000);  // 0.20M +/- 25%
    CHECK(n <= 250000);

    nn::Rng rng2(8);
    SequenceClassifier none("clf", 128, 128, TemporalMode::none, rng2);
    const std::int64_t delta = n - none.num_parameters();
    CHECK(delta >= 150000);
    CHECK(delta <= 250000);
}

TEST_CASE("aux-head loss cannot reach audio encoder parameters") {
    set_num_threads(1);
    ModelConfig mc = ModelConfig::tiny();
    ASDnBModel model(mc);
    const std::int64_t t_len = 4;
    Tensor face = randn({t_len, 1, 112, 112}, 19, 0.3);
    Tensor body = randn({t_len, 1, 112, 112}, 23, 0.3);
    Tensor mfcc = randn({1, 1, 4 * t_len, 13}, 29);
    const ModelOutput out = model.forward(face, body, mfcc, 1, t_len, true);

    nn::ParamRefs all;
    model.params(all);
    nn::zero_grads(all);
    // gradient only through the auxiliary (visual) head
    model.backward(Tensor::zeros({1, t_len}), Tensor::full({1, t_len}, 1.0));

    nn::ParamRefs audio_params;
    model.audio()->params(audio_params);
    CHECK(grad_norm(audio_params) == 0.0);
    nn::ParamRefs visual_params;
    model.visual().params(visual_params);
    CHECK(grad_norm(visual_params) > 0.0);
}

TEST_CASE("embedding surface enforces the expected modality") {
    nn::Rng rng(9);
    SequenceClassifier clf("clf", 16, 16, TemporalMode::bidirectional_gru, rng);
    EmbeddingSequence seq;
    seq.values = randn({5, 16}, 31);
    seq.modality = Modality::fused;
    const Tensor logits = clf.forward_embedding(seq, Modality::fused);
    CHECK(logits.shape() == std::vector<std::int64_t>{5});
    CHECK_THROWS_AS(clf.forward_embedding(seq, Modality::visual), ShapeMismatch);
}
