#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "robustlab/data.hpp"
#include "robustlab/trainer.hpp"

namespace robustlab {

// Configuration problems carry the offending field path.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SynthDataSpec {
  SynthKind kind = SynthKind::two_gaussians;
  int n = 512;
  int test_n = 128;
  int unlabeled_n = 0;
  int d = 8;
  float margin = 2.0f;
  uint64_t seed = 1;
};

struct DataConfig {
  enum class Kind : uint8_t { idx, synthetic } kind = Kind::synthetic;
  // idx
  std::string images, labels, test_images, test_labels;
  std::string unlabeled_images, unlabeled_labels;
  // synthetic
  SynthDataSpec synth;
};

// The run-config document: TrainConfig plus the data source. Unknown keys
// are rejected with their path before any compute starts.
struct RunConfigDocument {
  TrainConfig train;
  DataConfig data;
};

RunConfigDocument parse_config(const nlohmann::json& doc);
RunConfigDocument load_config_file(const std::string& path);

// Canonical resolved form: every field explicit, numbers normalized. Feeding
// it back through parse_config reproduces the same run.
nlohmann::json resolve_config(const RunConfigDocument& cfg);

// FNV-1a over the canonical serialization.
std::string config_digest(const nlohmann::json& resolved);

TrainData load_train_data(const DataConfig& data);

}  // namespace robustlab
