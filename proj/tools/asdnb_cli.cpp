#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "asdnb/errors.hpp"
#include "asdnb/io.hpp"
#include "asdnb/loss.hpp"
#include "asdnb/mfcc.hpp"
#include "asdnb/model.hpp"
#include "asdnb/run_config.hpp"
#include "asdnb/synthetic.hpp"
#include "asdnb/threading.hpp"
#include "asdnb/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace asdnb;

namespace {

// flags win over the config file; ASDNB_SEED wins over both
KeyValueConfig resolve_config(const std::string& config_path,
                              const std::map<std::string, std::string>& overrides) {
    KeyValueConfig cfg;
    if (!config_path.empty()) cfg = KeyValueConfig::from_file(config_path);
    for (const auto& [k, v] : overrides) cfg.set(k, v);
    if (const char* env_seed = std::getenv("ASDNB_SEED")) cfg.set("seed", env_seed);
    return cfg;
}

TemporalMode temporal_from_string(const std::string& s) {
    if (s == "bigru") return TemporalMode::bidirectional_gru;
    if (s == "gru") return TemporalMode::forward_gru;
    if (s == "bilstm") return TemporalMode::bidirectional_lstm;
    if (s == "lstm") return TemporalMode::forward_lstm;
    if (s == "none") return TemporalMode::none;
    throw ConfigError("unknown temporal mode '" + s + "' (bigru|gru|bilstm|lstm|none)");
}

StreamMode streams_from_string(const std::string& s) {
    if (s == "both") return StreamMode::face_and_body;
    if (s == "face") return StreamMode::face_only;
    if (s == "body") return StreamMode::body_only;
    throw ConfigError("unknown stream mode '" + s + "' (both|face|body)");
}

ModelConfig model_config_from(const KeyValueConfig& cfg) {
    ModelConfig mc;
    mc.seed = cfg.get_u64("seed", 0);
    mc.temporal = temporal_from_string(cfg.get_str("temporal", "bigru"));
    mc.streams = streams_from_string(cfg.get_str("streams", "both"));
    mc.use_audio = cfg.get_bool("use_audio", true);
    const std::string ablation = cfg.get_str("ablation", "none");
    if (ablation == "visual-only")
        mc.use_audio = false;
    else if (ablation == "face-only")
        mc.streams = StreamMode::face_only;
    else if (ablation == "body-only")
        mc.streams = StreamMode::body_only;
    else if (ablation != "none")
        throw ConfigError("unknown ablation '" + ablation + "' (visual-only|face-only|body-only|none)");
    return mc;
}

void apply_threads(const KeyValueConfig& cfg) {
    const auto threads = cfg.get_int("threads", 0);
    if (threads > 0) set_num_threads(static_cast<int>(threads));
}

// model config round-trip through the checkpoint manifest, so eval/infer
// rebuild the exact architecture
std::map<std::string, std::string> model_config_to_map(const ModelConfig& mc) {
    std::map<std::string, std::string> kv;
    kv["seed"] = std::to_string(mc.seed);
    kv["use_audio"] = mc.use_audio ? "true" : "false";
    kv["temporal"] = mc.temporal == TemporalMode::bidirectional_gru ? "bigru"
                     : mc.temporal == TemporalMode::forward_gru     ? "gru"
                     : mc.temporal == TemporalMode::bidirectional_lstm ? "bilstm"
                     : mc.temporal == TemporalMode::forward_lstm       ? "lstm"
                                                                       : "none";
    kv["streams"] = mc.streams == StreamMode::face_and_body ? "both"
                    : mc.streams == StreamMode::face_only   ? "face"
                                                            : "body";
    return kv;
}

ModelConfig model_config_from_map(const std::map<std::string, std::string>& kv) {
    KeyValueConfig cfg;
    for (const auto& [k, v] : kv) cfg.set(k, v);
    return model_config_from(cfg);
}

constexpr const char* kModelConfigFile = "model_config.json";

void write_model_config(const ModelConfig& mc, const std::string& out_dir) {
    json j = model_config_to_map(mc);
    write_text_file(out_dir + "/" + kModelConfigFile, j.dump(2) + "\n");
}

ModelConfig read_model_config_next_to(const std::string& checkpoint_path) {
    const fs::path p = fs::path(checkpoint_path).parent_path() / kModelConfigFile;
    if (!fs::exists(p))
        throw CheckpointError("missing " + std::string(kModelConfigFile) + " beside '" +
                              checkpoint_path + "'");
    const json j = json::parse(read_text_file(p.string()));
    std::map<std::string, std::string> kv;
    for (auto it = j.begin(); it != j.end(); ++it) kv[it.key()] = it.value().get<std::string>();
    return model_config_from_map(kv);
}

int cmd_train(const std::string& config_path, const std::map<std::string, std::string>& overrides) {
    const KeyValueConfig cfg = resolve_config(config_path, overrides);
    apply_threads(cfg);

    const std::string data_dir = cfg.get_str("data", "");
    const std::string out_dir = cfg.get_str("out", "run");
    if (data_dir.empty()) throw ConfigError("train requires a data directory ('data' key or --data)");

    ModelConfig mc = model_config_from(cfg);
    TrainConfig tc;
    tc.epochs = static_cast<int>(cfg.get_int("epochs", tc.epochs));
    tc.lr0 = cfg.get_real("lr0", tc.lr0);
    tc.lr_decay = cfg.get_real("lr_decay", tc.lr_decay);
    tc.batch_size = static_cast<int>(cfg.get_int("batch_size", tc.batch_size));
    tc.clip_len = static_cast<int>(cfg.get_int("clip_len", tc.clip_len));
    tc.seed = cfg.get_u64("seed", 0);
    tc.augment = cfg.get_bool("augment", true);
    tc.grad_clip = cfg.get_real("grad_clip", 0);
    tc.init_checkpoint = cfg.get_str("init_checkpoint", "");
    tc.resume_checkpoint = cfg.get_str("resume_checkpoint", "");
    tc.augmentation.flip_prob = cfg.get_real("flip_prob", tc.augmentation.flip_prob);
    tc.augmentation.rotate_degrees = cfg.get_real("rotate_degrees", tc.augmentation.rotate_degrees);
    tc.augmentation.crop_scale_min = cfg.get_real("crop_scale_min", tc.augmentation.crop_scale_min);
    tc.augmentation.crop_scale_max = cfg.get_real("crop_scale_max", tc.augmentation.crop_scale_max);
    tc.augmentation.negative_audio_prob =
        cfg.get_real("negative_audio_prob", tc.augmentation.negative_audio_prob);
    tc.augmentation.snr_db_min = cfg.get_real("snr_db_min", tc.augmentation.snr_db_min);
    tc.augmentation.snr_db_max = cfg.get_real("snr_db_max", tc.augmentation.snr_db_max);
    tc.augmentation.seed = tc.seed;

    const std::vector<ClipSample> train_tracks = load_track_dataset(data_dir);
    std::vector<ClipSample> val_tracks;
    const std::string val_dir = cfg.get_str("val_data", "");
    if (!val_dir.empty()) val_tracks = load_track_dataset(val_dir);

    fs::create_directories(out_dir);
    ASDnBModel model(mc);
    std::cout << "model parameters: " << model.num_parameters() << "\n";
    Trainer trainer(model, tc);
    const TrainResult result = trainer.train(train_tracks, val_tracks.empty() ? nullptr : &val_tracks, out_dir);
    write_model_config(mc, out_dir);

    RunManifest manifest;
    manifest.command = "train";
    manifest.config = cfg.values();
    manifest.seed = tc.seed;
    if (!config_path.empty()) manifest.inputs.emplace_back(config_path, file_fingerprint(config_path));
    manifest.inputs.emplace_back(data_dir + "/manifest.json", file_fingerprint(data_dir + "/manifest.json"));
    manifest.outputs = {result.final_checkpoint, result.best_checkpoint, out_dir + "/metrics.jsonl"};
    write_run_manifest(manifest, out_dir + "/manifest.json");

    const EpochMetrics& last = result.history.back();
    std::cout << "epoch " << last.epoch << ": loss " << last.train_loss;
    if (last.val_map) std::cout << ", val mAP " << *last.val_map;
    std::cout << "\n";
    return 0;
}

int cmd_eval(const std::string& config_path, const std::map<std::string, std::string>& overrides) {
    const KeyValueConfig cfg = resolve_config(config_path, overrides);
    apply_threads(cfg);
    const std::string out_dir = cfg.get_str("out", "eval");
    fs::create_directories(out_dir);
    const Real threshold = cfg.get_real("threshold", 0.5);
    const std::string annotations_path = cfg.get_str("annotations", "");
    const std::string predictions_path = cfg.get_str("predictions", "");
    const std::string checkpoint_path = cfg.get_str("checkpoint", "");
    const std::string data_dir = cfg.get_str("data", "");

    json metrics;
    std::vector<PredictionRecord> predictions;
    RunManifest manifest;
    manifest.command = "eval";
    manifest.config = cfg.values();
    manifest.seed = cfg.get_u64("seed", 0);

    if (!predictions_path.empty()) {
        // metrics-only mode: join an existing prediction CSV with ground truth
        if (annotations_path.empty())
            throw ConfigError("eval with --predictions requires --annotations");
        predictions = load_predictions(predictions_path);
        manifest.inputs.emplace_back(predictions_path, file_fingerprint(predictions_path));
    } else {
        if (checkpoint_path.empty() || data_dir.empty())
            throw ConfigError("eval requires either --predictions or both --checkpoint and --data");
        ModelConfig mc = read_model_config_next_to(checkpoint_path);
        ASDnBModel model(mc);
        restore_model(model, load_checkpoint(checkpoint_path));
        const std::vector<ClipSample> tracks = load_track_dataset(data_dir);
        for (const ClipSample& t : tracks) validate_sample(t);
        predictions = predictions_for_tracks(model, tracks);

        // track labels give mAP/F1 directly
        std::map<std::string, VideoPredictions> by_video;
        std::vector<int> decisions, labels;
        const auto probs = predict_tracks(model, tracks);
        for (std::size_t i = 0; i < tracks.size(); ++i) {
            auto& v = by_video[tracks[i].track_id];
            v.scores = probs[i];
            v.labels = tracks[i].labels;
            for (std::size_t t = 0; t < probs[i].size(); ++t) {
                decisions.push_back(probs[i][t] >= threshold ? 1 : 0);
                labels.push_back(tracks[i].labels[t]);
            }
        }
        metrics["map"] = mean_average_precision(by_video);
        const F1Result f1 = f1_score(decisions, labels);
        metrics["f1"] = f1.f1;
        metrics["precision"] = f1.precision;
        metrics["recall"] = f1.recall;
        metrics["num_tracks"] = tracks.size();

        const std::string plot_dir = cfg.get_str("plots", "");
        if (!plot_dir.empty()) {
            fs::create_directories(plot_dir);
            for (std::size_t i = 0; i < tracks.size(); ++i)
                write_score_plot(probs[i], tracks[i].labels,
                                 plot_dir + "/" + tracks[i].track_id + ".ppm");
            manifest.outputs.push_back(plot_dir);
        }
        manifest.inputs.emplace_back(checkpoint_path, file_fingerprint(checkpoint_path));
    }

    if (!annotations_path.empty()) {
        const std::vector<AnnotationTrack> annotations = load_annotations(annotations_path);
        BucketSpec spec;
        spec.frame_w_px = cfg.get_real("frame_w", spec.frame_w_px);
        spec.frame_h_px = cfg.get_real("frame_h", spec.frame_h_px);
        const BreakdownReport report = bucketed_map(predictions, annotations, spec);
        metrics["map"] = report.overall_map;
        const std::string which = cfg.get_str("buckets", "all");
        auto wanted = [&](const char* name) {
            return which == "all" || which.find(name) != std::string::npos;
        };
        json buckets;
        auto fill = [](const std::vector<BucketResult>& rs) {
            json j = json::object();
            for (const auto& r : rs) j[r.bucket] = {{"map", r.map}, {"count", r.count}};
            return j;
        };
        if (wanted("face-size")) buckets["face_size"] = fill(report.face_size);
        if (wanted("num-faces")) buckets["num_faces"] = fill(report.num_faces);
        if (wanted("hbp")) buckets["hbp"] = fill(report.hbp);
        metrics["buckets"] = std::move(buckets);
        manifest.inputs.emplace_back(annotations_path, file_fingerprint(annotations_path));
    }

    const std::string pred_out = out_dir + "/predictions.csv";
    write_predictions(predictions, pred_out);
    write_text_file(out_dir + "/metrics.json", metrics.dump(2) + "\n");
    manifest.outputs.push_back(pred_out);
    manifest.outputs.push_back(out_dir + "/metrics.json");
    write_run_manifest(manifest, out_dir + "/manifest.json");
    std::cout << metrics.dump(2) << "\n";
    return 0;
}

int cmd_infer(const std::string& config_path, const std::map<std::string, std::string>& overrides) {
    const KeyValueConfig cfg = resolve_config(config_path, overrides);
    apply_threads(cfg);
    const std::string checkpoint_path = cfg.get_str("checkpoint", "");
    const std::string data_dir = cfg.get_str("data", "");
    const std::string out_dir = cfg.get_str("out", "infer");
    if (checkpoint_path.empty() || data_dir.empty())
        throw ConfigError("infer requires --checkpoint and --data");
    fs::create_directories(out_dir);

    ASDnBModel model(read_model_config_next_to(checkpoint_path));
    restore_model(model, load_checkpoint(checkpoint_path));
    const std::vector<ClipSample> tracks = load_track_dataset(data_dir);
    for (const ClipSample& t : tracks) validate_sample(t);
    const auto predictions = predictions_for_tracks(model, tracks);
    write_predictions(predictions, out_dir + "/predictions.csv");

    RunManifest manifest;
    manifest.command = "infer";
    manifest.config = cfg.values();
    manifest.seed = cfg.get_u64("seed", 0);
    manifest.inputs.emplace_back(checkpoint_path, file_fingerprint(checkpoint_path));
    manifest.outputs.push_back(out_dir + "/predictions.csv");
    write_run_manifest(manifest, out_dir + "/manifest.json");
    std::cout << "wrote " << predictions.size() << " predictions\n";
    return 0;
}

int cmd_synth(const std::string& config_path, const std::map<std::string, std::string>& overrides) {
    const KeyValueConfig cfg = resolve_config(config_path, overrides);
    SyntheticSpec spec;
    spec.num_tracks = static_cast<int>(cfg.get_int("tracks", spec.num_tracks));
    spec.frames_per_track = static_cast<int>(cfg.get_int("frames", spec.frames_per_track));
    spec.signal_channel = signal_channel_from_string(cfg.get_str("signal", "both"));
    spec.tone_hz = cfg.get_real("tone_hz", spec.tone_hz);
    spec.seed = cfg.get_u64("seed", 0);
    spec.fps = cfg.get_real("fps", spec.fps);
    spec.min_run = static_cast<int>(cfg.get_int("min_run", spec.min_run));
    spec.max_run = static_cast<int>(cfg.get_int("max_run", spec.max_run));
    spec.feature_noise_prob = cfg.get_real("feature_noise", spec.feature_noise_prob);
    const std::string out_dir = cfg.get_str("out", "synthetic");
    try {
        spec.validate();
    } catch (const ValueRange& e) {
        throw ConfigError(e.what());
    }

    write_synthetic_dataset(spec, out_dir);

    RunManifest manifest;
    manifest.command = "synth";
    manifest.config = cfg.values();
    manifest.seed = spec.seed;
    manifest.outputs.push_back(out_dir);
    write_run_manifest(manifest, out_dir + "/run_manifest.json");
    std::cout << "wrote " << spec.num_tracks << " tracks to " << out_dir << "\n";
    return 0;
}

int cmd_features(const std::string& wav_path, const std::string& out_path, std::int64_t align_frames,
                 Real fps) {
    int rate = 0;
    const std::vector<Real> wav = read_wav(wav_path, &rate);
    MFCCMatrix mfcc = compute_mfcc(wav, rate);
    if (align_frames > 0) {
        MFCCMatrix aligned;
        aligned.frames = align_audio_to_video(mfcc, align_frames, fps);
        mfcc = aligned;
    }
    write_mfcc_dump(mfcc, out_path);
    std::cout << "wrote " << mfcc.num_frames() << "x" << kMfccCoeffs << " features to " << out_path
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ASDnB: active speaker detection with face and body fusion"};
    app.require_subcommand(1);

    std::string config_path;
    std::map<std::string, std::string> overrides;
    auto add_override = [&overrides](const std::string& key) {
        return [&overrides, key](const std::string& v) { overrides[key] = v; };
    };

    CLI::App* train = app.add_subcommand("train", "train a model on a track dataset");
    train->add_option("--config", config_path, "flat key = value config file");
    for (const char* key : {"data", "val_data", "out", "epochs", "lr0", "lr_decay", "batch_size",
                            "clip_len", "seed", "augment", "grad_clip", "threads", "streams",
                            "use_audio", "temporal", "ablation", "init_checkpoint",
                            "resume_checkpoint", "negative_audio_prob", "flip_prob"}) {
        std::string flag = "--" + std::string(key);
        for (auto& c : flag)
            if (c == '_') c = '-';
        train->add_option_function<std::string>(flag, add_override(key));
    }

    CLI::App* eval = app.add_subcommand("eval", "score a dataset and compute mAP/F1/breakdowns");
    eval->add_option("--config", config_path, "flat key = value config file");
    for (const char* key : {"checkpoint", "data", "out", "annotations", "predictions", "threshold",
                            "threads", "plots", "frame_w", "frame_h", "seed", "buckets"}) {
        std::string flag = "--" + std::string(key);
        for (auto& c : flag)
            if (c == '_') c = '-';
        eval->add_option_function<std::string>(flag, add_override(key));
    }

    CLI::App* infer = app.add_subcommand("infer", "score a dataset, emit predictions only");
    for (const char* key : {"checkpoint", "data", "out", "threads", "seed"})
        infer->add_option_function<std::string>("--" + std::string(key), add_override(key));

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic oracle dataset");
    for (const char* key : {"tracks", "frames", "signal", "tone_hz", "seed", "fps", "min_run",
                            "max_run", "feature_noise", "out"}) {
        std::string flag = "--" + std::string(key);
        for (auto& c : flag)
            if (c == '_') c = '-';
        synth->add_option_function<std::string>(flag, add_override(key));
    }

    CLI::App* features = app.add_subcommand("features", "dump MFCC features for a WAV file");
    std::string wav_path, feat_out = "features.mfcc";
    std::int64_t align_frames = 0;
    Real feat_fps = 25.0;
    features->add_option("wav", wav_path, "input 16 kHz mono WAV")->required();
    features->add_option("--out", feat_out, "output dump path");
    features->add_option("--align-frames", align_frames, "resample rows to 4*T for T video frames");
    features->add_option("--fps", feat_fps, "video frame rate for --align-frames");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(config_path, overrides);
        if (eval->parsed()) return cmd_eval(config_path, overrides);
        if (infer->parsed()) return cmd_infer(config_path, overrides);
        if (synth->parsed()) return cmd_synth(config_path, overrides);
        if (features->parsed()) return cmd_features(wav_path, feat_out, align_frames, feat_fps);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const NonFiniteLoss& e) {
        std::cerr << "training aborted: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
