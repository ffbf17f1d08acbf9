#include "asdnb/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "asdnb/dataset.hpp"
#include "asdnb/errors.hpp"
#include "asdnb/loss.hpp"

namespace asdnb {

using json = nlohmann::json;

Real lr_at(int epoch, Real lr0, Real decay) {
    if (epoch < 1) throw BadEpoch("epoch " + std::to_string(epoch) + " (must be >= 1)");
    return lr0 * std::pow(decay, epoch - 1);
}

// --------------------------------------------------------------------- Adam

Adam::Adam(nn::ParamRefs params, Real beta1, Real beta2, Real eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto* p : params_) {
        m_.push_back(Tensor::zeros(p->value.shape()));
        v_.push_back(Tensor::zeros(p->value.shape()));
    }
}

void Adam::clip_grad_norm(Real max_norm) {
    if (max_norm <= 0) return;
    Real sq = 0;
    for (const auto* p : params_)
        for (std::int64_t i = 0; i < p->grad.numel(); ++i) sq += p->grad[i] * p->grad[i];
    const Real norm = std::sqrt(sq);
    if (norm <= max_norm) return;
    const Real scale = max_norm / norm;
    for (auto* p : params_) p->grad.scale_(scale);
}

void Adam::step(Real lr) {
    ++step_count_;
    const Real bc1 = 1.0 - std::pow(beta1_, static_cast<Real>(step_count_));
    const Real bc2 = 1.0 - std::pow(beta2_, static_cast<Real>(step_count_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        nn::Parameter& p = *params_[k];
        Tensor& m = m_[k];
        Tensor& v = v_[k];
        for (std::int64_t i = 0; i < p.value.numel(); ++i) {
            const Real g = p.grad[i];
            m[i] = beta1_ * m[i] + (1 - beta1_) * g;
            v[i] = beta2_ * v[i] + (1 - beta2_) * g * g;
            p.value[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
        }
    }
}

void Adam::export_state(std::vector<std::pair<std::string, Tensor>>& out) const {
    for (std::size_t k = 0; k < params_.size(); ++k) {
        out.emplace_back(params_[k]->name + ".adam_m", m_[k]);
        out.emplace_back(params_[k]->name + ".adam_v", v_[k]);
    }
    Tensor step({1});
    step[0] = static_cast<Real>(step_count_);
    out.emplace_back("optimizer.step", std::move(step));
}

void Adam::import_state(const CheckpointData& data) {
    for (std::size_t k = 0; k < params_.size(); ++k) {
        const Tensor* m = data.find(params_[k]->name + ".adam_m");
        const Tensor* v = data.find(params_[k]->name + ".adam_v");
        if (!m || !v) throw CheckpointError("optimizer state missing for " + params_[k]->name);
        if (!m->same_shape(m_[k]) || !v->same_shape(v_[k]))
            throw CheckpointError("optimizer state shape mismatch for " + params_[k]->name);
        m_[k] = m->clone();
        v_[k] = v->clone();
    }
    const Tensor* step = data.find("optimizer.step");
    if (!step) throw CheckpointError("optimizer step count missing");
    step_count_ = static_cast<std::int64_t>((*step)[0]);
}

// ------------------------------------------------------------- model glue

std::uint64_t config_fingerprint(const ModelConfig& c) {
    std::ostringstream ss;
    ss << c.embed_dim << '|' << c.input_channels << '|';
    for (int v : c.visual_channels) ss << v << ',';
    ss << '|';
    for (int v : c.audio_channels) ss << v << ',';
    ss << '|';
    for (int v : c.audio_blocks) ss << v << ',';
    ss << '|' << c.se_reduction << '|' << c.gru_hidden << '|' << c.kernel_pair.first << ','
       << c.kernel_pair.second << '|' << static_cast<int>(c.temporal) << '|'
       << static_cast<int>(c.streams) << '|' << c.use_audio;
    return fnv1a(ss.str());
}

CheckpointData snapshot_model(ASDnBModel& model, int epoch, std::uint64_t fingerprint,
                              const Adam* optimizer) {
    CheckpointData data;
    data.epoch = epoch;
    data.config_fingerprint = fingerprint;
    nn::ParamRefs params;
    model.params(params);
    for (const auto* p : params) data.tensors.emplace_back(p->name, p->value.clone());
    nn::StateRefs buffers;
    model.state(buffers);
    for (const auto& [name, t] : buffers) data.tensors.emplace_back(name, t->clone());
    if (optimizer) optimizer->export_state(data.tensors);
    return data;
}

void restore_model(ASDnBModel& model, const CheckpointData& data) {
    nn::ParamRefs params;
    model.params(params);
    for (auto* p : params) {
        const Tensor* t = data.find(p->name);
        if (!t) throw CheckpointError("parameter '" + p->name + "' missing from checkpoint");
        if (!t->same_shape(p->value))
            throw CheckpointError("shape mismatch for '" + p->name + "': checkpoint " +
                                  const_cast<Tensor*>(t)->shape_str() + " vs model " +
                                  p->value.shape_str());
        p->value = t->clone();
    }
    nn::StateRefs buffers;
    model.state(buffers);
    for (auto& [name, tensor] : buffers) {
        const Tensor* t = data.find(name);
        if (!t) throw CheckpointError("buffer '" + name + "' missing from checkpoint");
        if (!t->same_shape(*tensor)) throw CheckpointError("shape mismatch for '" + name + "'");
        *tensor = t->clone();
    }
}

// -------------------------------------------------------------- prediction

std::vector<std::vector<Real>> predict_tracks(ASDnBModel& model,
                                              const std::vector<ClipSample>& tracks) {
    std::vector<std::vector<Real>> out;
    out.reserve(tracks.size());
    const bool with_audio = model.config().use_audio;
    for (const ClipSample& track : tracks) {
        const BatchInputs batch = make_batch({&track}, with_audio);
        const ModelOutput y =
            model.forward(batch.face, batch.body, batch.audio_image, 1, batch.frames, false);
        std::vector<Real> probs(static_cast<std::size_t>(batch.frames));
        for (std::int64_t t = 0; t < batch.frames; ++t)
            probs[static_cast<std::size_t>(t)] = 1.0 / (1.0 + std::exp(-y.logits_av[t]));
        out.push_back(std::move(probs));
    }
    return out;
}

Real evaluate_tracks_map(ASDnBModel& model, const std::vector<ClipSample>& tracks) {
    const auto probs = predict_tracks(model, tracks);
    std::map<std::string, VideoPredictions> by_video;
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        auto& v = by_video[tracks[i].track_id];
        v.scores = probs[i];
        v.labels = tracks[i].labels;
    }
    return mean_average_precision(by_video);
}

std::vector<PredictionRecord> predictions_for_tracks(ASDnBModel& model,
                                                     const std::vector<ClipSample>& tracks) {
    const auto probs = predict_tracks(model, tracks);
    std::vector<PredictionRecord> out;
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        const ClipSample& track = tracks[i];
        for (int t = 0; t < track.num_frames(); ++t) {
            PredictionRecord rec;
            rec.video_id = track.track_id;
            rec.entity_id = track.track_id;
            rec.frame_timestamp = static_cast<Real>(t) / track.fps;
            rec.score = probs[i][static_cast<std::size_t>(t)];
            out.push_back(std::move(rec));
        }
    }
    return out;
}

// ----------------------------------------------------------------- Trainer

Trainer::Trainer(ASDnBModel& model, TrainConfig config) : model_(model), config_(std::move(config)) {}

TrainResult Trainer::train(const std::vector<ClipSample>& train_tracks,
                           const std::vector<ClipSample>* val_tracks, const std::string& out_dir) {
    if (train_tracks.empty()) throw EmptyDataset("training set is empty");
    for (const ClipSample& t : train_tracks) validate_sample(t);
    std::filesystem::create_directories(out_dir);

    nn::ParamRefs params;
    model_.params(params);
    Adam optimizer(params);
    const std::uint64_t fingerprint = config_fingerprint(model_.config());

    int start_epoch = 1;
    if (!config_.resume_checkpoint.empty()) {
        const CheckpointData data = load_checkpoint(config_.resume_checkpoint);
        if (data.config_fingerprint != fingerprint)
            throw CheckpointError("resume checkpoint was produced by a different model config");
        restore_model(model_, data);
        optimizer.import_state(data);
        start_epoch = data.epoch + 1;
    } else if (!config_.init_checkpoint.empty()) {
        restore_model(model_, load_checkpoint(config_.init_checkpoint));
    }

    std::ofstream metrics_log(out_dir + "/metrics.jsonl",
                              start_epoch > 1 ? std::ios::app : std::ios::trunc);
    if (!metrics_log) throw IoError("cannot open metrics log in '" + out_dir + "'");

    TrainResult result;
    result.final_checkpoint = out_dir + "/checkpoint_final.ckpt";
    result.best_checkpoint = out_dir + "/checkpoint_best.ckpt";
    Real best_score = -1;
    const bool with_audio = model_.config().use_audio;

    for (int epoch = start_epoch; epoch <= config_.epochs; ++epoch) {
        const Real alpha = alpha_at(epoch);
        const Real lr = lr_at(epoch, config_.lr0, config_.lr_decay);

        // seeded shuffle of track order
        std::vector<std::size_t> order(train_tracks.size());
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 shuffle_rng(mix_seed(config_.seed, static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        // window + augment each track (seeds keyed by epoch and track id, not
        // by shuffle position)
        std::vector<ClipSample> clips;
        clips.reserve(order.size());
        for (std::size_t idx : order) {
            const std::uint64_t clip_seed =
                mix_seed(config_.seed, static_cast<std::uint64_t>(epoch) * 0x10000ULL + idx);
            ClipSample clip = sample_clip(train_tracks[idx], config_.clip_len, clip_seed);
            if (config_.augment) clip = augment_clip(clip, config_.augmentation, clip_seed);
            clips.push_back(std::move(clip));
        }

        // batches of equal clip length, preserving order
        std::map<int, std::vector<std::size_t>> by_len;
        std::vector<std::vector<std::size_t>> batches;
        for (std::size_t ci = 0; ci < clips.size(); ++ci) {
            auto& bucket = by_len[clips[ci].num_frames()];
            bucket.push_back(ci);
            if (static_cast<int>(bucket.size()) == config_.batch_size) {
                batches.push_back(bucket);
                bucket.clear();
            }
        }
        for (auto& [len, bucket] : by_len)
            if (!bucket.empty()) batches.push_back(bucket);

        // negative audio sampling within each batch (donors drawn from the
        // batch's pre-mix waveforms)
        if (config_.augment && with_audio) {
            for (std::size_t bi = 0; bi < batches.size(); ++bi) {
                const auto& members = batches[bi];
                if (members.size() < 2) continue;
                std::vector<std::vector<Real>> donors;
                donors.reserve(members.size());
                for (std::size_t ci : members) donors.push_back(clips[ci].waveform);
                std::mt19937_64 mix_rng(mix_seed(config_.seed ^ 0xa0d10ULL,
                                                 static_cast<std::uint64_t>(epoch) * 0x10000ULL + bi));
                std::uniform_real_distribution<Real> unit(0, 1);
                for (std::size_t i = 0; i < members.size(); ++i) {
                    const bool apply = unit(mix_rng) < config_.augmentation.negative_audio_prob;
                    const std::size_t donor = (i + 1 + mix_rng() % (members.size() - 1)) % members.size();
                    if (!apply || donor == i) continue;
                    clips[members[i]] =
                        negative_audio_mix(clips[members[i]], donors[donor], config_.augmentation,
                                           mix_seed(static_cast<std::uint64_t>(epoch), i));
                }
            }
        }

        Real loss_sum = 0;
        std::int64_t loss_weight = 0;
        for (const auto& batch_indices : batches) {
            std::vector<const ClipSample*> batch_clips;
            batch_clips.reserve(batch_indices.size());
            for (std::size_t ci : batch_indices) batch_clips.push_back(&clips[ci]);
            const BatchInputs batch = make_batch(batch_clips, with_audio);
            nn::zero_grads(params);
            const ModelOutput y = model_.forward(batch.face, batch.body, batch.audio_image,
                                                 batch.batch, batch.frames, true);
            const BatchLoss loss =
                total_loss_batch(y.logits_av, y.logits_v, batch.labels, epoch, true);
            if (!std::isfinite(loss.value)) {
                json dump;
                dump["epoch"] = epoch;
                dump["loss_av"] = loss.loss_av;
                dump["loss_v"] = loss.loss_v;
                json ids = json::array();
                for (const ClipSample* c : batch_clips) ids.push_back(c->track_id);
                dump["batch_tracks"] = std::move(ids);
                std::ofstream(out_dir + "/abort_dump.json") << dump.dump(2) << "\n";
                throw NonFiniteLoss("epoch " + std::to_string(epoch) +
                                    "; diagnostic batch written to abort_dump.json");
            }
            model_.backward(loss.g_av, loss.g_v);
            optimizer.clip_grad_norm(config_.grad_clip);
            optimizer.step(lr);
            loss_sum += loss.value * static_cast<Real>(batch.batch);
            loss_weight += batch.batch;
        }

        EpochMetrics em;
        em.epoch = epoch;
        em.alpha = alpha;
        em.lr = lr;
        em.train_loss = loss_sum / static_cast<Real>(loss_weight);
        if (val_tracks && !val_tracks->empty())
            em.val_map = evaluate_tracks_map(model_, *val_tracks);
        result.history.push_back(em);

        json line;
        line["epoch"] = em.epoch;
        line["alpha"] = em.alpha;
        line["lr"] = em.lr;
        line["train_loss"] = em.train_loss;
        if (em.val_map) line["val_map"] = *em.val_map;
        metrics_log << line.dump() << "\n";
        metrics_log.flush();

        const Real score = em.val_map ? *em.val_map : -em.train_loss;
        if (score > best_score) {
            best_score = score;
            save_checkpoint(result.best_checkpoint, snapshot_model(model_, epoch, fingerprint, &optimizer));
        }
        save_checkpoint(result.final_checkpoint, snapshot_model(model_, epoch, fingerprint, &optimizer));
    }
    return result;
}

}  // namespace asdnb
