#pragma once

#include <string>

#include "robustlab/nets.hpp"

namespace robustlab {

// AROF1 container: 5 magic bytes, u32-le length-prefixed canonical JSON
// header (epoch, config digest, rng state, model spec, parameter manifest),
// then little-endian float32 parameter data in manifest order. Round-trips
// are byte-exact.
struct CheckpointMeta {
  int epoch = 0;
  std::string config_digest;
  std::string rng_state;
};

void save_checkpoint(const Model& model, const CheckpointMeta& meta, const std::string& path);

struct LoadedCheckpoint {
  Model model;
  CheckpointMeta meta;
};

// Validates the manifest against the embedded spec's shape plan.
LoadedCheckpoint load_checkpoint(const std::string& path);

// Additionally rejects checkpoints whose spec disagrees with `expected`.
LoadedCheckpoint load_checkpoint(const std::string& path, const ModelSpec& expected);

}  // namespace robustlab
