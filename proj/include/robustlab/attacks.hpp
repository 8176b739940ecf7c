#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "robustlab/nets.hpp"
#include "robustlab/rng.hpp"
#include "robustlab/tensor.hpp"

namespace robustlab {

enum class Norm : uint8_t { linf, l2 };

// Perturbation set {delta : ||delta||_p <= eps}, in input units.
struct PerturbationModel {
  Norm norm = Norm::linf;
  float eps = 8.0f / 255.0f;
};

enum class AttackKind : uint8_t { none, fgsm, pgd };

struct AttackSpec {
  AttackKind kind = AttackKind::pgd;
  int steps = 10;
  float step_size = 2.0f / 255.0f;
  bool random_init = true;
  int restarts = 1;
  // clamp x+delta into [0,1] after every step; off exposes the bare
  // projected-ascent dynamics
  bool clamp_input = true;
};

void validate(const AttackSpec& spec);

// Hard class indices or soft target distributions (mixup), never both.
struct Labels {
  std::vector<int> hard;
  Tensor soft;

  bool is_soft() const { return hard.empty(); }
  int batch() const { return is_soft() ? soft.shape[0] : static_cast<int>(hard.size()); }
  static Labels from_hard(std::vector<int> y) { return Labels{std::move(y), {}}; }
  static Labels from_soft(Tensor t) { return Labels{{}, std::move(t)}; }
};

// Project each example of a batched delta onto the ball. Points already
// inside come back bit-identical; l2 points outside are rescaled radially
// with a result guaranteed <= eps.
Tensor project(const Tensor& delta, const PerturbationModel& pm);

// Sample delta0 with ||delta0||_p <= eps. linf: per-coordinate
// uniform(-eps, eps); l2: Gaussian direction scaled by eps * u^(1/d).
Tensor random_init(const std::vector<int>& shape, const PerturbationModel& pm, RngStream& rng);

// Called after every inner step with the current feasible iterate.
using StepObserver = std::function<void(int restart, int step, const Tensor& delta, const Tensor& x_adv)>;

// Final iterate of every restart, in restart order. Restart r of example i
// draws from a stream derived from (stream_seed, i, r), so candidate sets
// for smaller restart counts are prefixes of larger ones.
std::vector<Tensor> attack_candidates(const Model& m, const Tensor& x, const Labels& y,
                                      const PerturbationModel& pm, const AttackSpec& spec,
                                      uint64_t stream_seed, const StepObserver& observer = {});

// PGD of Eq.-2 form: delta <- project(delta + alpha * step(grad_x loss)),
// per-example best loss across restarts. linf steps use sign (sign(0)=0),
// l2 steps the per-example normalized gradient (skipped at zero norm).
Tensor pgd_attack(const Model& m, const Tensor& x, const Labels& y, const PerturbationModel& pm,
                  const AttackSpec& spec, uint64_t stream_seed, const StepObserver& observer = {});

// Single step from the (optionally random) start; identical to pgd_attack
// with steps = 1.
Tensor fgsm_attack(const Model& m, const Tensor& x, const Labels& y, const PerturbationModel& pm,
                   const AttackSpec& spec, uint64_t stream_seed, const StepObserver& observer = {});

// Closed-form worst case for a binary linear scorer with logits [0, w.x+b]
// under cross-entropy; the test oracle for PGD convergence. y in {0,1}.
struct LinearWorstCase {
  Tensor delta;
  double loss;
};
LinearWorstCase linear_worstcase(const Tensor& w, float b, const Tensor& x, int y,
                                 const PerturbationModel& pm);

// Cross-entropy loss of the same binary linear scorer at x+delta, evaluated
// in double;  shared by the closed form and the grid-search checks.
double linear_binary_loss(const Tensor& w, float b, const Tensor& x, const Tensor& delta, int y);

}  // namespace robustlab
