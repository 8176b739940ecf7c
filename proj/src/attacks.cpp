#include "robustlab/attacks.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "robustlab/rng.hpp"

namespace robustlab {

namespace {

// Examples are rows of the leading dimension; a 1-d tensor is one example.
int example_count(const Tensor& t) { return t.ndim() >= 2 ? t.shape[0] : 1; }
int64_t example_size(const Tensor& t) { return t.numel() / example_count(t); }

double l2_norm_example(const Tensor& t, int i) {
  const int64_t d = example_size(t);
  const float* p = t.data.data() + static_cast<int64_t>(i) * d;
  double acc = 0.0;
  for (int64_t j = 0; j < d; ++j) acc += static_cast<double>(p[j]) * static_cast<double>(p[j]);
  return std::sqrt(acc);
}

void project_l2_example(Tensor& t, int i, float eps) {
  const int64_t d = example_size(t);
  float* p = t.data.data() + static_cast<int64_t>(i) * d;
  double norm = l2_norm_example(t, i);
  if (norm <= static_cast<double>(eps)) return;
  double s = static_cast<double>(eps) / norm;
  for (int attempt = 0; attempt < 8; ++attempt) {
    for (int64_t j = 0; j < d; ++j) p[j] = static_cast<float>(static_cast<double>(p[j]) * s);
    if (l2_norm_example(t, i) <= static_cast<double>(eps)) return;
    s = 1.0 - 0x1.0p-20;
  }
  throw std::logic_error("project: l2 rescale failed to reach the ball");
}

void clamp_to_input_range(const Tensor& x, Tensor& delta) {
  for (size_t j = 0; j < delta.data.size(); ++j) {
    const float adv = x.data[j] + delta.data[j];
    if (adv > 1.0f) delta.data[j] = 1.0f - x.data[j];
    else if (adv < 0.0f) delta.data[j] = 0.0f - x.data[j];
  }
}

void enforce_feasible(const Tensor& x, const Tensor& delta, const PerturbationModel& pm,
                      bool clamped) {
  const int n = example_count(delta);
  if (pm.norm == Norm::linf) {
    for (float v : delta.data)
      if (std::fabs(v) > pm.eps) throw std::logic_error("attack: linf feasibility violated");
  } else {
    for (int i = 0; i < n; ++i)
      if (l2_norm_example(delta, i) > static_cast<double>(pm.eps))
        throw std::logic_error("attack: l2 feasibility violated");
  }
  if (clamped) {
    for (size_t j = 0; j < delta.data.size(); ++j) {
      const float adv = x.data[j] + delta.data[j];
      if (adv < 0.0f || adv > 1.0f) throw std::logic_error("attack: input range violated");
    }
  }
}

Tensor adversarial_input(const Tensor& x, const Tensor& delta) {
  Tensor out = x;
  for (size_t j = 0; j < out.data.size(); ++j) out.data[j] += delta.data[j];
  return out;
}

// loss gradient with respect to the input, and the per-example losses
Tensor input_gradient(const Model& m, const Tensor& x_adv, const Labels& y) {
  Tape tape;
  NodeId xa = tape.leaf(x_adv, true);
  NodeId logits = forward_on_tape(m, tape, xa);
  NodeId loss = y.is_soft() ? tape.cross_entropy_soft(logits, y.soft)
                            : tape.cross_entropy(logits, y.hard);
  Gradients g = backward(tape, loss);
  const Tensor* gx = g.find(xa);
  if (!gx) throw std::logic_error("attack: missing input gradient");
  return *gx;
}

std::vector<float> loss_per_example(const Model& m, const Tensor& x_adv, const Labels& y) {
  const Tensor logits = forward(m, x_adv);
  return y.is_soft() ? per_example_cross_entropy_soft(logits, y.soft)
                     : per_example_cross_entropy(logits, y.hard);
}

void fill_random_init_example(float* p, int64_t d, const PerturbationModel& pm, RngStream& rng) {
  if (pm.eps == 0.0f) {
    for (int64_t j = 0; j < d; ++j) p[j] = 0.0f;
    return;
  }
  if (pm.norm == Norm::linf) {
    for (int64_t j = 0; j < d; ++j) p[j] = rng.uniform(-pm.eps, pm.eps);
  } else {
    double norm2 = 0.0;
    for (int64_t j = 0; j < d; ++j) {
      p[j] = rng.normal();
      norm2 += static_cast<double>(p[j]) * static_cast<double>(p[j]);
    }
    const double norm = std::sqrt(norm2);
    const double radius =
        static_cast<double>(pm.eps) *
        std::pow(static_cast<double>(rng.uniform_pos()), 1.0 / static_cast<double>(d));
    if (norm == 0.0) {
      for (int64_t j = 0; j < d; ++j) p[j] = 0.0f;
      return;
    }
    double s = radius / norm;
    for (int attempt = 0; attempt < 8; ++attempt) {
      double scaled2 = 0.0;
      for (int64_t j = 0; j < d; ++j) {
        p[j] = static_cast<float>(static_cast<double>(p[j]) * s);
        scaled2 += static_cast<double>(p[j]) * static_cast<double>(p[j]);
      }
      if (std::sqrt(scaled2) <= static_cast<double>(pm.eps)) return;
      s = 1.0 - 0x1.0p-20;
    }
    throw std::logic_error("random_init: l2 sample failed to land in the ball");
  }
}

}  // namespace

void validate(const AttackSpec& spec) {
  if (spec.kind == AttackKind::none) return;
  if (spec.steps < 1) throw std::invalid_argument("attack: steps must be >= 1");
  if (spec.kind == AttackKind::fgsm && spec.steps != 1)
    throw std::invalid_argument("attack: fgsm implies steps = 1");
  if (spec.step_size <= 0.0f) throw std::invalid_argument("attack: step_size must be > 0");
  if (spec.restarts < 1) throw std::invalid_argument("attack: restarts must be >= 1");
}

Tensor project(const Tensor& delta, const PerturbationModel& pm) {
  if (pm.eps < 0.0f) throw std::invalid_argument("project: eps must be >= 0");
  Tensor out = delta;
  if (pm.norm == Norm::linf) {
    for (float& v : out.data) {
      if (v > pm.eps) v = pm.eps;
      else if (v < -pm.eps) v = -pm.eps;
    }
  } else {
    const int n = example_count(out);
    for (int i = 0; i < n; ++i) project_l2_example(out, i, pm.eps);
  }
  return out;
}

Tensor random_init(const std::vector<int>& shape, const PerturbationModel& pm, RngStream& rng) {
  Tensor out(shape);
  const int n = example_count(out);
  const int64_t d = example_size(out);
  for (int i = 0; i < n; ++i)
    fill_random_init_example(out.data.data() + static_cast<int64_t>(i) * d, d, pm, rng);
  return out;
}

std::vector<Tensor> attack_candidates(const Model& m, const Tensor& x, const Labels& y,
                                      const PerturbationModel& pm, const AttackSpec& spec,
                                      uint64_t stream_seed, const StepObserver& observer) {
  validate(spec);
  if (spec.kind == AttackKind::none)
    throw std::invalid_argument("attack: kind none generates no perturbation");
  if (y.batch() != example_count(x))
    throw std::invalid_argument("attack: got " + std::to_string(y.batch()) + " labels for " +
                                std::to_string(example_count(x)) + " examples");
  if (pm.eps < 0.0f) throw std::invalid_argument("attack: eps must be >= 0");

  const int n = example_count(x);
  const int64_t d = example_size(x);

  std::vector<Tensor> candidates;
  candidates.reserve(static_cast<size_t>(spec.restarts));

  if (pm.eps == 0.0f) {
    // degenerate radius: delta is identically zero
    candidates.assign(static_cast<size_t>(spec.restarts), Tensor(x.shape));
    return candidates;
  }

  for (int r = 0; r < spec.restarts; ++r) {
    Tensor delta(x.shape);
    if (spec.random_init) {
      for (int i = 0; i < n; ++i) {
        RngStream rng(derive(stream_seed, {static_cast<uint64_t>(i), static_cast<uint64_t>(r)}));
        fill_random_init_example(delta.data.data() + static_cast<int64_t>(i) * d, d, pm, rng);
      }
      if (spec.clamp_input) clamp_to_input_range(x, delta);
      delta = project(delta, pm);
    }
    enforce_feasible(x, delta, pm, spec.clamp_input);
    if (observer) observer(r, 0, delta, adversarial_input(x, delta));

    for (int t = 1; t <= spec.steps; ++t) {
      const Tensor grad = input_gradient(m, adversarial_input(x, delta), y);
      if (pm.norm == Norm::linf) {
        for (size_t j = 0; j < delta.data.size(); ++j) {
          const float g = grad.data[j];
          // sign(0) = 0
          const float step = g > 0.0f ? spec.step_size : (g < 0.0f ? -spec.step_size : 0.0f);
          delta.data[j] += step;
        }
      } else {
        for (int i = 0; i < n; ++i) {
          const double norm = l2_norm_example(grad, i);
          if (norm == 0.0) continue;  // direction undefined; skip this example
          const float* gp = grad.data.data() + static_cast<int64_t>(i) * d;
          float* dp = delta.data.data() + static_cast<int64_t>(i) * d;
          const double s = static_cast<double>(spec.step_size) / norm;
          for (int64_t j = 0; j < d; ++j)
            dp[j] += static_cast<float>(static_cast<double>(gp[j]) * s);
        }
      }
      delta = project(delta, pm);
      if (spec.clamp_input) {
        clamp_to_input_range(x, delta);
        delta = project(delta, pm);
      }
      enforce_feasible(x, delta, pm, spec.clamp_input);
      if (observer) observer(r, t, delta, adversarial_input(x, delta));
    }
    candidates.push_back(std::move(delta));
  }
  return candidates;
}

Tensor pgd_attack(const Model& m, const Tensor& x, const Labels& y, const PerturbationModel& pm,
                  const AttackSpec& spec, uint64_t stream_seed, const StepObserver& observer) {
  if (spec.kind != AttackKind::pgd) throw std::invalid_argument("pgd_attack: spec.kind must be pgd");
  auto candidates = attack_candidates(m, x, y, pm, spec, stream_seed, observer);
  if (candidates.size() == 1) return std::move(candidates[0]);

  const int n = example_count(x);
  const int64_t d = example_size(x);
  Tensor best = candidates[0];
  std::vector<float> best_loss = loss_per_example(m, adversarial_input(x, best), y);
  for (size_t r = 1; r < candidates.size(); ++r) {
    const auto loss = loss_per_example(m, adversarial_input(x, candidates[r]), y);
    for (int i = 0; i < n; ++i) {
      if (loss[static_cast<size_t>(i)] > best_loss[static_cast<size_t>(i)]) {
        best_loss[static_cast<size_t>(i)] = loss[static_cast<size_t>(i)];
        const float* src = candidates[r].data.data() + static_cast<int64_t>(i) * d;
        float* dst = best.data.data() + static_cast<int64_t>(i) * d;
        for (int64_t j = 0; j < d; ++j) dst[j] = src[j];
      }
    }
  }
  return best;
}

Tensor fgsm_attack(const Model& m, const Tensor& x, const Labels& y, const PerturbationModel& pm,
                   const AttackSpec& spec, uint64_t stream_seed, const StepObserver& observer) {
  if (spec.kind != AttackKind::fgsm) throw std::invalid_argument("fgsm_attack: spec.kind must be fgsm");
  AttackSpec as_pgd = spec;
  as_pgd.kind = AttackKind::pgd;
  as_pgd.steps = 1;
  return pgd_attack(m, x, y, pm, as_pgd, stream_seed, observer);
}

double linear_binary_loss(const Tensor& w, float b, const Tensor& x, const Tensor& delta, int y) {
  double z = static_cast<double>(b);
  for (size_t j = 0; j < w.data.size(); ++j)
    z += static_cast<double>(w.data[j]) *
         (static_cast<double>(x.data[j]) + static_cast<double>(delta.data[j]));
  // CE over logits [0, z]: label 1 -> softplus(-z), label 0 -> softplus(z)
  const double t = (y == 1) ? -z : z;
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

LinearWorstCase linear_worstcase(const Tensor& w, float b, const Tensor& x, int y,
                                 const PerturbationModel& pm) {
  if (!w.same_shape(x)) throw std::invalid_argument("linear_worstcase: w and x shapes differ");
  if (y != 0 && y != 1) throw std::invalid_argument("linear_worstcase: label must be 0 or 1");
  const float s = (y == 1) ? 1.0f : -1.0f;  // loss rises as s*z falls
  Tensor delta(w.shape);
  if (pm.norm == Norm::linf) {
    for (size_t j = 0; j < w.data.size(); ++j) {
      const float wj = w.data[j];
      delta.data[j] = wj > 0.0f ? -s * pm.eps : (wj < 0.0f ? s * pm.eps : 0.0f);
    }
  } else {
    double norm = 0.0;
    for (float v : w.data) norm += static_cast<double>(v) * static_cast<double>(v);
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      const double scale = -static_cast<double>(s) * static_cast<double>(pm.eps) / norm;
      for (size_t j = 0; j < w.data.size(); ++j)
        delta.data[j] = static_cast<float>(static_cast<double>(w.data[j]) * scale);
    }
  }
  return {delta, linear_binary_loss(w, b, x, delta, y)};
}

}  // namespace robustlab
