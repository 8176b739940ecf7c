#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace robustlab {

enum class ScheduleFamily : uint8_t { piecewise, multiple_decay, linear_decay, cyclic, cosine };

// Epoch-indexed learning-rate schedule. Rates are per epoch; a new piecewise
// rate applies starting at its stage epoch.
struct ScheduleSpec {
  ScheduleFamily family = ScheduleFamily::piecewise;
  int total_epochs = 200;

  // piecewise: start_lr until the first stage, then each stage's rate from
  // its epoch on. Covers the tuned variants (single stage with an explicit
  // end rate).
  float start_lr = 0.1f;
  std::vector<std::pair<int, float>> stages;  // (epoch, rate), strictly increasing epochs

  // multiple_decay
  float decrement = 0.01f;
  int period = 50;

  // linear_decay
  int plateau_end = 100;
  int ramp_end = 150;
  float end_lr = 0.01f;

  // cyclic
  float max_lr = 0.2f;
  float peak_fraction = 0.4f;
};

ScheduleSpec default_piecewise(int total_epochs = 200);

void validate(const ScheduleSpec& spec);

// Pure; rejects epochs outside [0, total_epochs).
float lr_at(const ScheduleSpec& spec, int epoch);

std::vector<std::pair<int, float>> schedule_table(const ScheduleSpec& spec);

}  // namespace robustlab
