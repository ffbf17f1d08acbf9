#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "asdnb/augment.hpp"
#include "asdnb/checkpoint.hpp"
#include "asdnb/evaluator.hpp"
#include "asdnb/model.hpp"
#include "asdnb/types.hpp"

namespace asdnb {

struct TrainConfig {
    int epochs = 30;
    Real lr0 = 1e-4;
    Real lr_decay = 0.95;  // per-epoch multiplier
    int batch_size = 4;
    int clip_len = 24;
    std::uint64_t seed = 0;
    bool augment = true;
    AugmentationConfig augmentation;
    Real grad_clip = 0;  // global-norm clip; 0 disables
    std::string init_checkpoint;    // finetune stage: parameters only
    std::string resume_checkpoint;  // continue epoch counter and optimizer
};

// lr(eps) = lr0 * decay^(eps-1); epoch 1 uses lr0 exactly. Throws BadEpoch.
Real lr_at(int epoch, Real lr0 = 1e-4, Real decay = 0.95);

class Adam {
public:
    explicit Adam(nn::ParamRefs params, Real beta1 = 0.9, Real beta2 = 0.999, Real eps = 1e-8);

    void step(Real lr);
    void clip_grad_norm(Real max_norm);

    // optimizer state as named tensors ("<param>.adam_m" / ".adam_v", plus
    // "optimizer.step")
    void export_state(std::vector<std::pair<std::string, Tensor>>& out) const;
    void import_state(const CheckpointData& data);

private:
    nn::ParamRefs params_;
    std::vector<Tensor> m_, v_;
    Real beta1_, beta2_, eps_;
    std::int64_t step_count_ = 0;
};

struct EpochMetrics {
    int epoch = 0;
    Real alpha = 0;
    Real lr = 0;
    Real train_loss = 0;
    std::optional<Real> val_map;
};

struct TrainResult {
    std::vector<EpochMetrics> history;
    std::string final_checkpoint;
    std::string best_checkpoint;
};

// Scores every track in evaluation mode (running batch-norm statistics,
// batch of one full track) and returns sigmoid(main-head logits) per frame.
std::vector<std::vector<Real>> predict_tracks(ASDnBModel& model,
                                              const std::vector<ClipSample>& tracks);

// Mean over tracks (as videos) of per-track AP against the tracks' labels.
Real evaluate_tracks_map(ASDnBModel& model, const std::vector<ClipSample>& tracks);

std::vector<PredictionRecord> predictions_for_tracks(ASDnBModel& model,
                                                     const std::vector<ClipSample>& tracks);

// Checkpoint glue: every trainable parameter plus batch-norm buffers (and
// optimizer state when given).
CheckpointData snapshot_model(ASDnBModel& model, int epoch, std::uint64_t fingerprint,
                              const Adam* optimizer);
void restore_model(ASDnBModel& model, const CheckpointData& data);  // CheckpointError on shape mismatch

std::uint64_t config_fingerprint(const ModelConfig& config);

class Trainer {
public:
    Trainer(ASDnBModel& model, TrainConfig config);

    // Writes checkpoint_final.ckpt / checkpoint_best.ckpt / metrics.jsonl
    // under out_dir. Throws EmptyDataset and NonFiniteLoss (after dumping a
    // diagnostic batch description).
    TrainResult train(const std::vector<ClipSample>& train_tracks,
                      const std::vector<ClipSample>* val_tracks, const std::string& out_dir);

private:
    ASDnBModel& model_;
    TrainConfig config_;
};

}  // namespace asdnb
