#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "asdnb/errors.hpp"
#include "asdnb/loss.hpp"
#include "asdnb/synthetic.hpp"
#include "asdnb/threading.hpp"
#include "asdnb/trainer.hpp"

using namespace asdnb;
namespace fs = std::filesystem;

namespace {

std::vector<ClipSample> tiny_dataset(int tracks, int frames, std::uint64_t seed) {
    SyntheticSpec spec;
    spec.num_tracks = tracks;
    spec.frames_per_track = frames;
    spec.seed = seed;
    spec.min_run = 3;
    spec.max_run = 6;
    return generate_synthetic(spec);
}

TrainConfig fast_config(int epochs) {
    TrainConfig tc;
    tc.epochs = epochs;
    tc.batch_size = 2;
    tc.clip_len = 8;
    tc.lr0 = 1e-3;
    tc.augment = false;
    tc.seed = 42;
    return tc;
}

std::string temp_dir(const std::string& name) {
    const std::string dir = (fs::temp_directory_path() / name).string();
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("learning-rate schedule anchors") {
    CHECK(lr_at(1) == 1e-4);
    CHECK(lr_at(2) == doctest::Approx(9.5e-5).epsilon(1e-13));
    CHECK(lr_at(30) == doctest::Approx(1e-4 * std::pow(0.95, 29)).epsilon(1e-13));
    CHECK_THROWS_AS(lr_at(0), BadEpoch);
}

TEST_CASE("checkpoints round-trip bit-exactly, optimizer state included") {
    set_num_threads(1);
    ModelConfig mc = ModelConfig::tiny();
    ASDnBModel model(mc);
    nn::ParamRefs params;
    model.params(params);
    // make optimizer state nonzero
    for (auto* p : params) p->grad.fill(0.125);
    Adam opt(params);
    opt.step(1e-3);

    const std::string path = (fs::temp_directory_path() / "asdnb_ckpt_test.ckpt").string();
    save_checkpoint(path, snapshot_model(model, 7, config_fingerprint(mc), &opt));
    const CheckpointData data = load_checkpoint(path);
    CHECK(data.epoch == 7);
    CHECK(data.config_fingerprint == config_fingerprint(mc));

    ModelConfig mc2 = ModelConfig::tiny();
    mc2.seed = 999;  // different init; restore must overwrite every value
    ASDnBModel other(mc2);
    restore_model(other, data);
    nn::ParamRefs other_params;
    other.params(other_params);
    REQUIRE(other_params.size() == params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        CHECK(other_params[i]->name == params[i]->name);
        for (std::int64_t k = 0; k < params[i]->value.numel(); ++k)
            CHECK(other_params[i]->value[k] == params[i]->value[k]);
    }

    Adam opt2(other_params);
    opt2.import_state(data);
    std::vector<std::pair<std::string, Tensor>> s1, s2;
    opt.export_state(s1);
    opt2.export_state(s2);
    REQUIRE(s1.size() == s2.size());
    for (std::size_t i = 0; i < s1.size(); ++i)
        for (std::int64_t k = 0; k < s1[i].second.numel(); ++k)
            CHECK(s1[i].second[k] == s2[i].second[k]);
    fs::remove(path);
}

TEST_CASE("restoring into a different architecture fails loudly") {
    ModelConfig tiny = ModelConfig::tiny();
    ASDnBModel model(tiny);
    const CheckpointData data = snapshot_model(model, 1, config_fingerprint(tiny), nullptr);
    ModelConfig bigger = ModelConfig::tiny();
    bigger.gru_hidden = 24;
    ASDnBModel other(bigger);
    CHECK_THROWS_AS(restore_model(other, data), CheckpointError);
}

TEST_CASE("two runs with one seed produce identical loss curves") {
    set_num_threads(1);
    const auto tracks = tiny_dataset(4, 8, 71);
    std::vector<Real> losses[2];
    for (int run = 0; run < 2; ++run) {
        ModelConfig mc = ModelConfig::tiny();
        ASDnBModel model(mc);
        Trainer trainer(model, fast_config(2));
        const TrainResult r = trainer.train(tracks, nullptr, temp_dir("asdnb_det_run"));
        for (const auto& em : r.history) losses[run].push_back(em.train_loss);
    }
    REQUIRE(losses[0].size() == losses[1].size());
    for (std::size_t i = 0; i < losses[0].size(); ++i) CHECK(losses[0][i] == losses[1][i]);
}

TEST_CASE("logged alpha and lr match the schedule functions exactly") {
    set_num_threads(1);
    const auto tracks = tiny_dataset(2, 8, 73);
    ModelConfig mc = ModelConfig::tiny();
    ASDnBModel model(mc);
    TrainConfig tc = fast_config(3);
    Trainer trainer(model, tc);
    const TrainResult r = trainer.train(tracks, nullptr, temp_dir("asdnb_sched_run"));
    REQUIRE(r.history.size() == 3);
    for (const auto& em : r.history) {
        CHECK(em.alpha == alpha_at(em.epoch));
        CHECK(em.lr == lr_at(em.epoch, tc.lr0, tc.lr_decay));
    }
}

TEST_CASE("training dumps diagnostics and aborts on non-finite loss") {
    set_num_threads(1);
    const auto tracks = tiny_dataset(2, 8, 79);
    ModelConfig mc = ModelConfig::tiny();
    ASDnBModel model(mc);
    nn::ParamRefs params;
    model.params(params);
    // poison the main head: nothing downstream can mask the NaN
    for (auto* p : params)
        if (p->name == "classifier.main.fc.weight")
            p->value[0] = std::numeric_limits<Real>::quiet_NaN();
    Trainer trainer(model, fast_config(1));
    const std::string out = temp_dir("asdnb_abort_run");
    CHECK_THROWS_AS(trainer.train(tracks, nullptr, out), NonFiniteLoss);
    CHECK(fs::exists(out + "/abort_dump.json"));
    fs::remove_all(out);
}

TEST_CASE("resuming continues the epoch counter, alpha and lr") {
    set_num_threads(1);
    const auto tracks = tiny_dataset(3, 8, 83);
    const std::string out = temp_dir("asdnb_resume_run");
    ModelConfig mc = ModelConfig::tiny();
    {
        ASDnBModel model(mc);
        Trainer trainer(model, fast_config(2));
        trainer.train(tracks, nullptr, out);
    }
    ASDnBModel model(mc);
    TrainConfig tc = fast_config(3);
    tc.resume_checkpoint = out + "/checkpoint_final.ckpt";
    Trainer trainer(model, tc);
    const TrainResult r = trainer.train(tracks, nullptr, out);
    REQUIRE(r.history.size() == 1);
    CHECK(r.history[0].epoch == 3);
    CHECK(r.history[0].alpha == alpha_at(3));
    CHECK(r.history[0].lr == lr_at(3, tc.lr0, tc.lr_decay));
    fs::remove_all(out);
}

TEST_CASE("finetune initializes parameters from the given checkpoint") {
    set_num_threads(1);
    const auto tracks = tiny_dataset(2, 8, 89);
    const std::string out = temp_dir("asdnb_finetune_run");
    ModelConfig mc = ModelConfig::tiny();
    std::vector<Real> first_values;
    {
        ASDnBModel model(mc);
        Trainer trainer(model, fast_config(1));
        trainer.train(tracks, nullptr, out);
        nn::ParamRefs params;
        model.params(params);
        for (std::int64_t k = 0; k < 5; ++k) first_values.push_back(params[0]->value[k]);
    }
    ModelConfig mc2 = ModelConfig::tiny();
    mc2.seed = 12345;
    ASDnBModel model(mc2);
    TrainConfig tc = fast_config(1);
    tc.init_checkpoint = out + "/checkpoint_final.ckpt";
    tc.lr0 = 0.0;  // one no-op epoch: parameters stay at the loaded values
    Trainer trainer(model, tc);
    trainer.train(tracks, nullptr, temp_dir("asdnb_finetune_run2"));
    nn::ParamRefs params;
    model.params(params);
    for (std::int64_t k = 0; k < 5; ++k) CHECK(params[0]->value[k] == first_values[static_cast<std::size_t>(k)]);
    fs::remove_all(out);
}

TEST_CASE("loss decreases while overfitting a fixed tiny batch") {
    set_num_threads(1);
    const auto tracks = tiny_dataset(2, 8, 97);
    ModelConfig mc = ModelConfig::tiny();
    ASDnBModel model(mc);
    TrainConfig tc = fast_config(5);
    Trainer trainer(model, tc);
    const TrainResult r = trainer.train(tracks, nullptr, temp_dir("asdnb_overfit_run"));
    REQUIRE(r.history.size() == 5);
    CHECK(r.history.back().train_loss < r.history.front().train_loss);
}

TEST_CASE("prediction helpers emit one record per frame") {
    set_num_threads(1);
    const auto tracks = tiny_dataset(2, 8, 101);
    ModelConfig mc = ModelConfig::tiny();
    ASDnBModel model(mc);
    const auto preds = predictions_for_tracks(model, tracks);
    CHECK(preds.size() == 16);
    CHECK(preds[0].video_id == "track_0000");
    for (const auto& p : preds) {
        CHECK(p.score >= 0.0);
        CHECK(p.score <= 1.0);
    }
    const Real m = evaluate_tracks_map(model, tracks);
    CHECK(m >= 0.0);
    CHECK(m <= 1.0);
}
