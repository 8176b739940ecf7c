#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "robustlab/attacks.hpp"
#include "robustlab/augment.hpp"
#include "robustlab/data.hpp"
#include "robustlab/nets.hpp"
#include "robustlab/runlog.hpp"
#include "robustlab/schedules.hpp"

namespace robustlab {

struct TrainConfig {
  ModelSpec model;
  PerturbationModel pm;
  AttackSpec train_attack;
  AttackSpec eval_attack;
  ScheduleSpec schedule;
  RegularizerSpec regularizer;
  float weight_decay = 5e-4f;
  float momentum = 0.9f;
  int batch_size = 128;
  int epochs = 200;
  uint64_t seed = 0;
  int val_holdout = 0;
  int eval_subsample = 0;  // 0 = evaluate full splits
  bool timing = false;     // record wall time per epoch (off keeps logs byte-stable)
  // weight_decay and an l2 regularizer compute the same penalty; stacking
  // them must be requested explicitly
  bool allow_decay_with_l2 = false;
};

void validate(const TrainConfig& config);

struct TrainData {
  Dataset train;
  Dataset test;
  std::optional<Dataset> unlabeled;
};

struct TrainHooks {
  std::string checkpoint_dir;  // empty: keep checkpoints out of the filesystem
  std::string config_digest;   // stamped into the log and each checkpoint
  std::function<void(const EpochRecord&, const Model&)> on_epoch;
};

// Thrown when a minibatch loss leaves the finite range.
struct TrainingDiverged : std::runtime_error {
  int epoch;
  int batch;
  TrainingDiverged(int e, int b)
      : std::runtime_error("training diverged: non-finite loss at epoch " + std::to_string(e) +
                           ", batch " + std::to_string(b)),
        epoch(e),
        batch(b) {}
};

// Minibatch SGD with momentum on the robust loss: per batch, generate delta
// with train_attack, step on loss(f(x+delta), y) + penalty + weight decay at
// the scheduled rate. One EpochRecord and one checkpoint per epoch.
// Bit-identical output for identical (config, data).
RunLog train(const TrainConfig& config, const TrainData& data, const TrainHooks& hooks = {});

struct EvalResult {
  double robust_err = 0.0;
  double std_err = 0.0;
  double robust_loss = 0.0;
  int n = 0;
};

// Robust error counts an example as misclassified when any restart candidate
// or the zero perturbation misclassifies it, so robust_err >= std_err and
// more restarts can only raise it.
EvalResult evaluate(const Model& model, const Dataset& split, const PerturbationModel& pm,
                    const AttackSpec& eval_attack, uint64_t seed, int subsample = 0,
                    int batch_size = 128);

struct GapReport {
  double final_mean = 0.0;
  double final_std = 0.0;  // population std over the last 5 epochs
  double best_err = 0.0;
  int best_epoch = 0;
  double diff = 0.0;  // final_mean - best_err
};

enum class GapMetric : uint8_t { test_robust_err, val_robust_err, train_robust_err };

// Table-1 protocol: final = mean/std over the last five epochs, best = the
// minimum over all epochs (earliest on ties), diff = final - best.
GapReport gap_report(const RunLog& log, GapMetric metric = GapMetric::test_robust_err);

struct EarlyStopChoice {
  int epoch = 0;
  std::string checkpoint;  // empty when the log has no persisted checkpoints
};

// argmin of validation robust error, earliest epoch on ties.
EarlyStopChoice select_early_stop(const RunLog& log);

// Catastrophic-overfitting probe: true iff the PGD train error exceeds the
// FGSM train error on the minibatch by more than `threshold`.
bool detect_catastrophic(const Model& model, const Tensor& x, const std::vector<int>& y,
                         const PerturbationModel& pm, const AttackSpec& fgsm_spec,
                         const AttackSpec& pgd_spec, double threshold = 0.4, uint64_t seed = 0);

// One run per width factor with shared seed and data.
struct WidthSweepRow {
  int width_factor = 0;
  GapReport gap;
};
std::vector<WidthSweepRow> sweep_width(const TrainConfig& base, const std::vector<int>& width_factors,
                                       const TrainData& data);

}  // namespace robustlab
