#pragma once

#include <string>
#include <vector>

#include "robustlab/runlog.hpp"
#include "robustlab/trainer.hpp"

namespace robustlab {

struct NamedLog {
  std::string name;
  RunLog log;
};

// Learning-curve plot: one pair of polylines (train/test robust error) per
// run, epoch axis, legend. Deterministic bytes for fixed input.
std::string render_curves_svg(const std::vector<NamedLog>& runs);

// Gap table in fixed-width text, one row per run.
std::string gap_table_text(const std::vector<NamedLog>& runs);

}  // namespace robustlab
