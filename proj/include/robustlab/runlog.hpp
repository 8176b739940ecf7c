#pragma once

#include <optional>
#include <string>
#include <vector>

namespace robustlab {

// One row of the learning curves: the quantities behind the robust/standard
// error plots and the gap protocol.
struct EpochRecord {
  int epoch = 0;
  float lr = 0.0f;
  float train_robust_err = 0.0f;
  float train_std_err = 0.0f;
  float train_robust_loss = 0.0f;
  float test_robust_err = 0.0f;
  float test_std_err = 0.0f;
  std::optional<float> val_robust_err;
  double seconds = 0.0;
};

struct RunLog {
  std::string config_digest;
  std::vector<EpochRecord> records;
  std::vector<std::string> checkpoints;  // one path per epoch when persisted
};

// Floats at 6 significant digits; optional val column left empty when absent.
void write_runlog_csv(const RunLog& log, const std::string& path);
RunLog read_runlog_csv(const std::string& path);
std::string runlog_csv_string(const RunLog& log);

}  // namespace robustlab
