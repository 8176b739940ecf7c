#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "robustlab/tensor.hpp"

namespace robustlab {

enum class SplitTag : uint8_t { train, val, test, unlabeled };

// Images in [0,1], labels as class indices (empty for the unlabeled split).
struct Dataset {
  Tensor inputs;  // [N,C,H,W]
  std::vector<int> labels;
  SplitTag tag = SplitTag::train;

  int size() const { return inputs.shape.empty() ? 0 : inputs.shape[0]; }
  Dataset subset(const std::vector<int>& indices) const;
};

// IDX container (big-endian dims, uint8 pixels scaled by 1/255).
Dataset load_idx(const std::string& images_path, const std::string& labels_path);
// Quantizes inputs with round(v * 255); inverse of load_idx's scaling.
void write_idx(const Dataset& ds, const std::string& images_path, const std::string& labels_path);

enum class SynthKind : uint8_t { two_gaussians, rings };

// Deterministic synthetic binary datasets, inputs shaped [n,1,1,d].
// two_gaussians: class means at +-margin*e1, unit covariance, rescaled and
// clipped into [0,1]. rings: two concentric circles in the first two
// coordinates separated by margin-scaled radii.
Dataset gen_synthetic(SynthKind kind, int n, int d, float margin, uint64_t seed);

// Structured multi-class image generator for desk-scale IDX runs: each class
// is a distinct bar/checker pattern plus seeded pixel noise.
Dataset gen_pattern_images(int n, int classes, int side, float noise, uint64_t seed);

// Seeded shuffled split; val receives exactly `count` examples.
std::pair<Dataset, Dataset> split_holdout(const Dataset& ds, int count, uint64_t seed);

}  // namespace robustlab
