#include "robustlab/schedules.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace robustlab {

ScheduleSpec default_piecewise(int total_epochs) {
  ScheduleSpec s;
  s.family = ScheduleFamily::piecewise;
  s.total_epochs = total_epochs;
  s.start_lr = 0.1f;
  s.stages = {{total_epochs / 2, 0.01f}, {total_epochs * 3 / 4, 0.001f}};
  return s;
}

void validate(const ScheduleSpec& spec) {
  if (spec.total_epochs < 1) throw std::invalid_argument("schedule: total_epochs must be >= 1");
  switch (spec.family) {
    case ScheduleFamily::piecewise: {
      if (spec.start_lr <= 0.0f) throw std::invalid_argument("schedule: start_lr must be > 0");
      int prev = 0;
      for (const auto& [epoch, rate] : spec.stages) {
        if (epoch <= prev)
          throw std::invalid_argument("schedule: stage epochs must be strictly increasing");
        if (epoch < 1 || epoch >= spec.total_epochs)
          throw std::invalid_argument("schedule: stage epoch " + std::to_string(epoch) +
                                      " outside (0," + std::to_string(spec.total_epochs) + ")");
        if (rate <= 0.0f) throw std::invalid_argument("schedule: stage rates must be > 0");
        prev = epoch;
      }
      break;
    }
    case ScheduleFamily::multiple_decay:
      if (spec.start_lr <= 0.0f || spec.decrement <= 0.0f || spec.period < 1)
        throw std::invalid_argument("schedule: multiple_decay needs start_lr, decrement > 0, period >= 1");
      if (spec.start_lr - spec.decrement * static_cast<float>((spec.total_epochs - 1) / spec.period) <= 0.0f)
        throw std::invalid_argument("schedule: multiple_decay rate would reach zero before the end");
      break;
    case ScheduleFamily::linear_decay:
      if (spec.start_lr <= 0.0f || spec.end_lr <= 0.0f)
        throw std::invalid_argument("schedule: linear_decay rates must be > 0");
      if (spec.plateau_end < 0 || spec.ramp_end <= spec.plateau_end || spec.ramp_end > spec.total_epochs)
        throw std::invalid_argument("schedule: linear_decay needs 0 <= plateau_end < ramp_end <= total");
      break;
    case ScheduleFamily::cyclic: {
      if (spec.max_lr <= 0.0f) throw std::invalid_argument("schedule: cyclic max_lr must be > 0");
      if (spec.peak_fraction <= 0.0f || spec.peak_fraction >= 1.0f)
        throw std::invalid_argument("schedule: cyclic peak_fraction must be in (0,1)");
      const int peak = static_cast<int>(std::lround(spec.peak_fraction * spec.total_epochs));
      if (peak < 1 || peak >= spec.total_epochs)
        throw std::invalid_argument("schedule: cyclic peak epoch degenerate for these parameters");
      break;
    }
    case ScheduleFamily::cosine:
      if (spec.start_lr <= 0.0f) throw std::invalid_argument("schedule: cosine start_lr must be > 0");
      break;
  }
}

float lr_at(const ScheduleSpec& spec, int epoch) {
  if (epoch < 0 || epoch >= spec.total_epochs) {
    throw std::invalid_argument("schedule: epoch " + std::to_string(epoch) + " outside [0," +
                                std::to_string(spec.total_epochs) + ")");
  }
  switch (spec.family) {
    case ScheduleFamily::piecewise: {
      float lr = spec.start_lr;
      for (const auto& [e, rate] : spec.stages) {
        if (epoch >= e) lr = rate;
      }
      return lr;
    }
    case ScheduleFamily::multiple_decay:
      return spec.start_lr - spec.decrement * static_cast<float>(epoch / spec.period);
    case ScheduleFamily::linear_decay: {
      if (epoch < spec.plateau_end) return spec.start_lr;
      if (epoch >= spec.ramp_end) return spec.end_lr;
      const float t = static_cast<float>(epoch - spec.plateau_end) /
                      static_cast<float>(spec.ramp_end - spec.plateau_end);
      return spec.start_lr + t * (spec.end_lr - spec.start_lr);
    }
    case ScheduleFamily::cyclic: {
      const int peak = static_cast<int>(std::lround(spec.peak_fraction * spec.total_epochs));
      if (epoch <= peak)
        return spec.max_lr * static_cast<float>(epoch) / static_cast<float>(peak);
      return spec.max_lr * static_cast<float>(spec.total_epochs - epoch) /
             static_cast<float>(spec.total_epochs - peak);
    }
    case ScheduleFamily::cosine:
      return 0.5f * spec.start_lr *
             (1.0f + std::cos(3.14159265358979323846f * static_cast<float>(epoch) /
                              static_cast<float>(spec.total_epochs)));
  }
  throw std::logic_error("schedule: unknown family");
}

std::vector<std::pair<int, float>> schedule_table(const ScheduleSpec& spec) {
  std::vector<std::pair<int, float>> out;
  out.reserve(static_cast<size_t>(spec.total_epochs));
  for (int e = 0; e < spec.total_epochs; ++e) out.emplace_back(e, lr_at(spec, e));
  return out;
}

}  // namespace robustlab
