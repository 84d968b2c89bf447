#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ufda/datakit/batches.hpp"
#include "ufda/nets/domain_head.hpp"
#include "ufda/trainer/model_state.hpp"

namespace ufda::trainer {

// -mean[log p_rec + log p_hat + log(1 - p_tilde)]. p_hat may be undefined,
// in which case its term is dropped (model without domain augmentation).
ag::Var loss_feature_enhanced(const ag::Var& p_rec, const ag::Var& p_hat, const ag::Var& p_tilde);

// Per-stage mean losses of one epoch. Values of stages that did not run are NaN.
struct EpochRecord {
  int64_t epoch = 0;  // 1-based
  bool warmup = false;
  std::vector<int> stages;  // executed stages, in execution order
  int64_t batches = 0;

  double l_domain = 0, l_live = 0, l_dis = 0, l_rec = 0, ufd_total = 0;
  double l_unl = 0, l_pres = 0, l_mine = 0, liveaug_total = 0;
  int64_t mine_skipped = 0;
  double l_adv = 0, l_d = 0, domainaug_total = 0;
  double l_aug = 0;
  int64_t bank_size = 0;
  int64_t bank_inserts = 0;
  double domain_head_accuracy = 0;  // NaN until C_d is pretrained

  std::array<double, 4> stage_seconds{};  // wall clock, kept out of the history file
};

const std::string& history_header();
std::string history_row(const EpochRecord& record);

// Called after each stage with the stage number (1..4).
using StageObserver = std::function<void(int stage, const ModelState& state)>;

// Global - stage - batch - loss lines, one per optimizer step.
struct StepLog {
  virtual ~StepLog() = default;
  virtual void write(int64_t epoch, int stage, int64_t batch, double loss) = 0;
};

struct EpochOptions {
  bool warmup = false;  // stage 1 only
  StageObserver observer;
  StepLog* step_log = nullptr;
};

// One epoch of the iterative module-wise schedule: each stage sweeps all
// batches of the epoch and updates only its own groups.
//   1: E, E_l, E_d, D   2: phi   3: G, E_GIN   4: E_l, C_l
// Every stage of epoch t sees the same batch stream (order and masks).
// Non-finite losses abort with a NumericError naming stage and batch.
EpochRecord train_epoch(ModelState& state, const datakit::PatchDataset& data, const EpochOptions& options = {});

struct DomainFeatures {
  Tensor domain;    // [N, L] d^f
  Tensor liveness;  // [N, L] l_s
};

// Harvests (d^f, l) pairs from one masked pass over the data with the current
// encoders. Leaves every group non-trainable.
DomainFeatures harvest_domain_features(ModelState& state, const datakit::PatchDataset& data);

// Fits and freezes C_d. Raises SequencingError when the configured warm-up
// epochs have not all completed, or when C_d is already frozen.
nets::DomainPretrainReport pretrain_domain_head(ModelState& state, const datakit::PatchDataset& data);

struct FitOptions {
  std::optional<std::filesystem::path> resume_from;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct FitResult {
  std::unique_ptr<ModelState> state;
  std::vector<EpochRecord> records;  // epochs run by this call
  std::filesystem::path history_path;
  std::filesystem::path final_checkpoint;
};

// Warm-up epochs, C_d pretraining, then full epochs up to config.epochs.
// When config.output_dir is set, writes history.csv, timing.csv, steps.csv
// and ckpt_epoch{N} after every epoch.
FitResult fit(const TrainConfig& config, const datakit::PatchDataset& train, const FitOptions& options = {});

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int64_t epoch);

}  // namespace ufda::trainer
