#include "robustlab/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "robustlab/checkpoint.hpp"
#include "robustlab/rng.hpp"

namespace robustlab {

namespace {

std::vector<int> shuffled_indices(int n, uint64_t seed) {
  std::vector<int> idx(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
  RngStream rng(seed);
  for (int i = n - 1; i > 0; --i)
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(rng.uniform_int(i + 1))]);
  return idx;
}

Tensor gather_rows(const Tensor& inputs, const std::vector<int>& order, int begin, int end) {
  const int64_t d = inputs.numel() / inputs.shape[0];
  std::vector<int> sh = inputs.shape;
  sh[0] = end - begin;
  Tensor out(sh);
  for (int i = begin; i < end; ++i)
    std::copy_n(inputs.data.begin() + static_cast<int64_t>(order[static_cast<size_t>(i)]) * d, d,
                out.data.begin() + static_cast<int64_t>(i - begin) * d);
  return out;
}

Tensor slice_rows(const Tensor& inputs, int begin, int end) {
  const int64_t d = inputs.numel() / inputs.shape[0];
  std::vector<int> sh = inputs.shape;
  sh[0] = end - begin;
  Tensor out(sh);
  std::copy_n(inputs.data.begin() + static_cast<int64_t>(begin) * d,
              static_cast<int64_t>(end - begin) * d, out.data.begin());
  return out;
}

Tensor add_tensors(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  for (size_t j = 0; j < out.data.size(); ++j) out.data[j] += b.data[j];
  return out;
}

struct BatchErrors {
  int robust_wrong = 0;
  int std_wrong = 0;
  double robust_loss_sum = 0.0;
};

// Robust misclassification over the candidate set {0} U {restart iterates};
// robust loss is the per-example worst case over the same set.
BatchErrors adversarial_errors(const Model& model, const Tensor& x, const std::vector<int>& y,
                               const PerturbationModel& pm, const AttackSpec& attack,
                               uint64_t stream_seed) {
  const int n = x.shape[0];
  BatchErrors out;

  const Tensor clean_logits = forward(model, x);
  const auto clean_pred = argmax_rows(clean_logits);
  const auto clean_loss = per_example_cross_entropy(clean_logits, y);
  std::vector<bool> wrong(static_cast<size_t>(n));
  std::vector<float> worst_loss = clean_loss;
  for (int i = 0; i < n; ++i) {
    wrong[static_cast<size_t>(i)] = clean_pred[static_cast<size_t>(i)] != y[static_cast<size_t>(i)];
    if (wrong[static_cast<size_t>(i)]) ++out.std_wrong;
  }

  if (attack.kind != AttackKind::none && pm.eps > 0.0f) {
    const Labels labels = Labels::from_hard(y);
    const auto candidates = attack_candidates(model, x, labels, pm, attack, stream_seed);
    for (const Tensor& delta : candidates) {
      const Tensor logits = forward(model, add_tensors(x, delta));
      const auto pred = argmax_rows(logits);
      const auto loss = per_example_cross_entropy(logits, y);
      for (int i = 0; i < n; ++i) {
        if (pred[static_cast<size_t>(i)] != y[static_cast<size_t>(i)]) wrong[static_cast<size_t>(i)] = true;
        worst_loss[static_cast<size_t>(i)] =
            std::max(worst_loss[static_cast<size_t>(i)], loss[static_cast<size_t>(i)]);
      }
    }
  }

  for (int i = 0; i < n; ++i) {
    if (wrong[static_cast<size_t>(i)]) ++out.robust_wrong;
    out.robust_loss_sum += static_cast<double>(worst_loss[static_cast<size_t>(i)]);
  }
  return out;
}

void check_labels(const Dataset& ds, int num_classes, const char* what) {
  for (int y : ds.labels)
    if (y < 0 || y >= num_classes)
      throw std::invalid_argument(std::string(what) + ": label " + std::to_string(y) +
                                  " out of range [0," + std::to_string(num_classes) + ")");
}

// The epoch/batch loop shared by robust, standard and semi-supervised runs.
// When pool is non-null each batch is composed of labeled and pseudo-labeled
// halves per the regularizer's labeled_fraction.
RunLog train_loop(const TrainConfig& config, const Dataset& train_split, const Dataset& val_split,
                  const Dataset& test_split, const PseudoLabeledPool* pool, const TrainHooks& hooks,
                  Model* final_model) {
  Model model = build(config.model, config.seed);
  std::vector<Tensor> velocity;
  velocity.reserve(model.params.size());
  for (const auto& p : model.params) velocity.emplace_back(p.value.shape);
  const auto weight_idx = penalizable_param_indices(model);

  RunLog log;
  log.config_digest = hooks.config_digest;
  if (!hooks.checkpoint_dir.empty()) std::filesystem::create_directories(hooks.checkpoint_dir);

  const int n_train = train_split.size();
  const int labeled_per_batch =
      pool ? static_cast<int>(std::ceil(static_cast<double>(config.regularizer.labeled_fraction) *
                                        config.batch_size))
           : config.batch_size;
  const int n_batches = (n_train + labeled_per_batch - 1) / labeled_per_batch;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const float lr = lr_at(config.schedule, epoch);
    const auto order = shuffled_indices(
        n_train, derive(config.seed, StreamTag::shuffle, {static_cast<uint64_t>(epoch)}));

    for (int b = 0; b < n_batches; ++b) {
      Tensor x;
      std::vector<int> y;
      if (pool) {
        RngStream comp(derive(config.seed, StreamTag::semisup,
                              {static_cast<uint64_t>(epoch), static_cast<uint64_t>(b)}));
        auto batch = compose_semisup_batch(train_split.inputs, train_split.labels, *pool,
                                           config.batch_size, config.regularizer.labeled_fraction,
                                           comp);
        x = std::move(batch.inputs);
        y = std::move(batch.labels);
      } else {
        const int begin = b * config.batch_size;
        const int end = std::min(n_train, begin + config.batch_size);
        x = gather_rows(train_split.inputs, order, begin, end);
        y.resize(static_cast<size_t>(end - begin));
        for (int i = begin; i < end; ++i)
          y[static_cast<size_t>(i - begin)] =
              train_split.labels[static_cast<size_t>(order[static_cast<size_t>(i)])];
      }

      Labels labels = Labels::from_hard(y);

      if (config.regularizer.kind == RegKind::cutout && config.regularizer.patch_len > 0) {
        RngStream aug(derive(config.seed, StreamTag::augment,
                             {static_cast<uint64_t>(epoch), static_cast<uint64_t>(b)}));
        x = cutout(x, config.regularizer.patch_len, aug);
      } else if (config.regularizer.kind == RegKind::mixup) {
        RngStream aug(derive(config.seed, StreamTag::augment,
                             {static_cast<uint64_t>(epoch), static_cast<uint64_t>(b)}));
        const int bs = x.shape[0];
        std::vector<int> perm(static_cast<size_t>(bs));
        for (int i = 0; i < bs; ++i) perm[static_cast<size_t>(i)] = i;
        for (int i = bs - 1; i > 0; --i)
          std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(aug.uniform_int(i + 1))]);
        const Tensor xb = gather_rows(x, perm, 0, bs);
        const Tensor la = one_hot(y, config.model.num_classes);
        std::vector<int> yb(static_cast<size_t>(bs));
        for (int i = 0; i < bs; ++i)
          yb[static_cast<size_t>(i)] = y[static_cast<size_t>(perm[static_cast<size_t>(i)])];
        const Tensor lb = one_hot(yb, config.model.num_classes);
        auto mixed = mixup(x, xb, la, lb, config.regularizer.mixup_alpha, aug);
        x = std::move(mixed.inputs);
        labels = Labels::from_soft(std::move(mixed.labels));
      }

      Tensor delta(x.shape);
      if (config.train_attack.kind != AttackKind::none) {
        const uint64_t attack_seed = derive(config.seed, StreamTag::train_attack,
                                            {static_cast<uint64_t>(epoch), static_cast<uint64_t>(b)});
        delta = config.train_attack.kind == AttackKind::pgd
                    ? pgd_attack(model, x, labels, config.pm, config.train_attack, attack_seed)
                    : fgsm_attack(model, x, labels, config.pm, config.train_attack, attack_seed);
      }

      Tape tape;
      const NodeId xa = tape.leaf(add_tensors(x, delta));
      std::vector<NodeId> param_ids;
      const NodeId logits = forward_on_tape(model, tape, xa, &param_ids);
      NodeId loss = labels.is_soft() ? tape.cross_entropy_soft(logits, labels.soft)
                                     : tape.cross_entropy(logits, labels.hard);
      std::vector<NodeId> weight_nodes;
      for (size_t wi : weight_idx) weight_nodes.push_back(param_ids[wi]);
      if (config.regularizer.kind == RegKind::l1 || config.regularizer.kind == RegKind::l2) {
        loss = tape.add(loss, penalty(tape, weight_nodes, config.regularizer.kind,
                                      config.regularizer.lambda));
      }
      if (config.weight_decay > 0.0f) {
        loss = tape.add(loss, penalty(tape, weight_nodes, RegKind::l2, config.weight_decay));
      }
      if (!std::isfinite(tape.value(loss).at(0))) throw TrainingDiverged(epoch, b);

      const Gradients grads = backward(tape, loss);
      for (size_t pi = 0; pi < model.params.size(); ++pi) {
        const Tensor* g = grads.find(param_ids[pi]);
        if (!g) continue;
        Tensor& v = velocity[pi];
        Tensor& p = model.params[pi].value;
        for (size_t j = 0; j < p.data.size(); ++j) {
          v.data[j] = config.momentum * v.data[j] + g->data[j];
          p.data[j] -= lr * v.data[j];
        }
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    const auto train_eval =
        evaluate(model, train_split, config.pm, config.eval_attack,
                 derive(config.seed, StreamTag::eval_attack, {0}), config.eval_subsample,
                 config.batch_size);
    rec.train_robust_err = static_cast<float>(train_eval.robust_err);
    rec.train_std_err = static_cast<float>(train_eval.std_err);
    rec.train_robust_loss = static_cast<float>(train_eval.robust_loss);
    const auto test_eval =
        evaluate(model, test_split, config.pm, config.eval_attack,
                 derive(config.seed, StreamTag::eval_attack, {1}), config.eval_subsample,
                 config.batch_size);
    rec.test_robust_err = static_cast<float>(test_eval.robust_err);
    rec.test_std_err = static_cast<float>(test_eval.std_err);
    if (val_split.size() > 0) {
      const auto val_eval =
          evaluate(model, val_split, config.pm, config.eval_attack,
                   derive(config.seed, StreamTag::eval_attack, {2}), config.eval_subsample,
                   config.batch_size);
      rec.val_robust_err = static_cast<float>(val_eval.robust_err);
    }
    if (config.timing) {
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    if (!hooks.checkpoint_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%03d.arof", epoch);
      const std::string path = hooks.checkpoint_dir + "/" + name;
      CheckpointMeta meta;
      meta.epoch = epoch;
      meta.config_digest = log.config_digest;
      meta.rng_state = std::to_string(config.seed);
      save_checkpoint(model, meta, path);
      log.checkpoints.push_back(path);
    }
    log.records.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec, model);
  }
  if (final_model) *final_model = std::move(model);
  return log;
}

}  // namespace

void validate(const TrainConfig& config) {
  validate(config.model);
  validate(config.train_attack);
  validate(config.eval_attack);
  validate(config.schedule);
  validate(config.regularizer);
  if (config.eval_attack.kind == AttackKind::none)
    throw std::invalid_argument("config: eval_attack must be fgsm or pgd");
  if (config.pm.eps < 0.0f) throw std::invalid_argument("config: eps must be >= 0");
  if (config.epochs != config.schedule.total_epochs)
    throw std::invalid_argument("config: epochs (" + std::to_string(config.epochs) +
                                ") must equal schedule.total_epochs (" +
                                std::to_string(config.schedule.total_epochs) + ")");
  if (config.batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
  if (config.val_holdout < 0) throw std::invalid_argument("config: val_holdout must be >= 0");
  if (config.eval_subsample < 0) throw std::invalid_argument("config: eval_subsample must be >= 0");
  if (config.weight_decay < 0.0f) throw std::invalid_argument("config: weight_decay must be >= 0");
  if (config.momentum < 0.0f || config.momentum >= 1.0f)
    throw std::invalid_argument("config: momentum must be in [0,1)");
  if (config.regularizer.kind == RegKind::l2 && config.regularizer.lambda > 0.0f &&
      config.weight_decay > 0.0f && !config.allow_decay_with_l2)
    throw std::invalid_argument(
        "config: l2 regularizer and weight_decay are the same penalty and would stack; set "
        "weight_decay to 0 or allow_decay_with_l2 to true");
  if (config.regularizer.kind == RegKind::semisup) {
    if (config.regularizer.labeled_fraction == 0.5f && config.batch_size % 2 != 0)
      throw std::invalid_argument("config: semisup with fraction 1/2 needs an even batch_size");
  }
}

EvalResult evaluate(const Model& model, const Dataset& split, const PerturbationModel& pm,
                    const AttackSpec& eval_attack, uint64_t seed, int subsample, int batch_size) {
  if (split.size() == 0) throw std::invalid_argument("evaluate: empty split");
  if (split.labels.empty()) throw std::invalid_argument("evaluate: split has no labels");

  const Dataset* ds = &split;
  Dataset picked;
  if (subsample > 0 && subsample < split.size()) {
    auto idx = shuffled_indices(split.size(), derive(seed, StreamTag::eval_subsample));
    idx.resize(static_cast<size_t>(subsample));
    std::sort(idx.begin(), idx.end());
    picked = split.subset(idx);
    ds = &picked;
  }

  const int n = ds->size();
  EvalResult result;
  result.n = n;
  int batch_index = 0;
  for (int start = 0; start < n; start += batch_size, ++batch_index) {
    const int end = std::min(n, start + batch_size);
    const Tensor x = slice_rows(ds->inputs, start, end);
    const std::vector<int> y(ds->labels.begin() + start, ds->labels.begin() + end);
    const auto errs = adversarial_errors(
        model, x, y, pm, eval_attack,
        derive(seed, StreamTag::eval_attack, {static_cast<uint64_t>(batch_index)}));
    result.robust_err += errs.robust_wrong;
    result.std_err += errs.std_wrong;
    result.robust_loss += errs.robust_loss_sum;
  }
  result.robust_err /= n;
  result.std_err /= n;
  result.robust_loss /= n;
  return result;
}

RunLog train(const TrainConfig& config, const TrainData& data, const TrainHooks& hooks) {
  validate(config);
  if (data.train.size() == 0) throw std::invalid_argument("train: empty training set");
  if (data.test.size() == 0) throw std::invalid_argument("train: empty test set");
  check_labels(data.train, config.model.num_classes, "train split");
  check_labels(data.test, config.model.num_classes, "test split");

  Dataset train_split = data.train;
  Dataset val_split;
  if (config.val_holdout > 0) {
    auto parts = split_holdout(data.train, config.val_holdout, config.seed);
    train_split = std::move(parts.first);
    val_split = std::move(parts.second);
  }

  PseudoLabeledPool pool;
  const bool semisup = config.regularizer.kind == RegKind::semisup;
  if (semisup) {
    if (!data.unlabeled.has_value() || data.unlabeled->size() == 0)
      throw std::invalid_argument("train: semisup requires an unlabeled split");
    // label the unlabeled data with a standard-trained classifier first
    TrainConfig std_cfg = config;
    std_cfg.train_attack.kind = AttackKind::none;
    std_cfg.regularizer = RegularizerSpec{};
    std_cfg.seed = derive(config.seed, {0x57Dull});
    Model standard_model;
    train_loop(std_cfg, train_split, Dataset{}, data.test, nullptr, TrainHooks{}, &standard_model);
    pool = pseudo_label(standard_model, data.unlabeled->inputs);
  }

  return train_loop(config, train_split, val_split, data.test, semisup ? &pool : nullptr, hooks,
                    nullptr);
}

GapReport gap_report(const RunLog& log, GapMetric metric) {
  if (log.records.size() < 5)
    throw std::invalid_argument("gap_report: need at least 5 epochs, got " +
                                std::to_string(log.records.size()));
  auto value_of = [&](const EpochRecord& r) -> double {
    switch (metric) {
      case GapMetric::test_robust_err: return r.test_robust_err;
      case GapMetric::train_robust_err: return r.train_robust_err;
      case GapMetric::val_robust_err:
        if (!r.val_robust_err)
          throw std::invalid_argument("gap_report: record " + std::to_string(r.epoch) +
                                      " has no validation error");
        return *r.val_robust_err;
    }
    throw std::logic_error("gap_report: unknown metric");
  };

  GapReport out;
  const size_t n = log.records.size();
  double sum = 0.0;
  for (size_t i = n - 5; i < n; ++i) sum += value_of(log.records[i]);
  out.final_mean = sum / 5.0;
  double var = 0.0;
  for (size_t i = n - 5; i < n; ++i) {
    const double d = value_of(log.records[i]) - out.final_mean;
    var += d * d;
  }
  out.final_std = std::sqrt(var / 5.0);

  out.best_err = value_of(log.records[0]);
  out.best_epoch = log.records[0].epoch;
  for (size_t i = 1; i < n; ++i) {
    const double v = value_of(log.records[i]);
    if (v < out.best_err) {
      out.best_err = v;
      out.best_epoch = log.records[i].epoch;
    }
  }
  out.diff = out.final_mean - out.best_err;
  return out;
}

EarlyStopChoice select_early_stop(const RunLog& log) {
  if (log.records.empty()) throw std::invalid_argument("select_early_stop: empty log");
  for (const auto& r : log.records)
    if (!r.val_robust_err)
      throw std::invalid_argument("select_early_stop: log has no validation column at epoch " +
                                  std::to_string(r.epoch));
  size_t best = 0;
  for (size_t i = 1; i < log.records.size(); ++i)
    if (*log.records[i].val_robust_err < *log.records[best].val_robust_err) best = i;
  EarlyStopChoice out;
  out.epoch = log.records[best].epoch;
  if (best < log.checkpoints.size()) out.checkpoint = log.checkpoints[best];
  return out;
}

bool detect_catastrophic(const Model& model, const Tensor& x, const std::vector<int>& y,
                         const PerturbationModel& pm, const AttackSpec& fgsm_spec,
                         const AttackSpec& pgd_spec, double threshold, uint64_t seed) {
  const uint64_t stream = derive(seed, StreamTag::eval_attack, {0xCA7ull});
  const auto fgsm_errs = adversarial_errors(model, x, y, pm, fgsm_spec, stream);
  const auto pgd_errs = adversarial_errors(model, x, y, pm, pgd_spec, stream);
  const int n = x.shape[0];
  const double fgsm_err = static_cast<double>(fgsm_errs.robust_wrong) / n;
  const double pgd_err = static_cast<double>(pgd_errs.robust_wrong) / n;
  return pgd_err - fgsm_err > threshold;
}

std::vector<WidthSweepRow> sweep_width(const TrainConfig& base, const std::vector<int>& width_factors,
                                       const TrainData& data) {
  if (width_factors.empty()) throw std::invalid_argument("sweep_width: no widths given");
  std::vector<WidthSweepRow> rows;
  for (int w : width_factors) {
    TrainConfig cfg = base;
    cfg.model.width_factor = w;
    const RunLog log = train(cfg, data);
    rows.push_back({w, gap_report(log, GapMetric::test_robust_err)});
  }
  return rows;
}

}  // namespace robustlab
