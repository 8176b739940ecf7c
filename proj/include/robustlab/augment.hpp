#pragma once

#include <cstdint>
#include <vector>

#include "robustlab/nets.hpp"
#include "robustlab/rng.hpp"
#include "robustlab/tape.hpp"
#include "robustlab/tensor.hpp"

namespace robustlab {

enum class RegKind : uint8_t { none, l1, l2, cutout, mixup, semisup };

struct RegularizerSpec {
  RegKind kind = RegKind::none;
  float lambda = 0.0f;           // l1 / l2
  int patch_len = 0;             // cutout
  float mixup_alpha = 1.4f;      // mixup
  float labeled_fraction = 0.5f; // semisup
};

void validate(const RegularizerSpec& spec);

// lambda * sum |w| or lambda * sum w^2 over the given weight nodes,
// recorded on the tape (l1 subgradient at 0 is 0).
NodeId penalty(Tape& tape, const std::vector<NodeId>& weight_nodes, RegKind kind, float lambda);

// Value-only counterpart for reporting.
double penalty_value(const std::vector<const Tensor*>& weights, RegKind kind, float lambda);

// Zero out a patch_len x patch_len square (all channels) centered at a pixel
// sampled uniformly per image; clipped at the borders. patch_len = 0 is the
// identity.
Tensor cutout(const Tensor& batch, int patch_len, RngStream& rng);

Tensor one_hot(const std::vector<int>& labels, int num_classes);

struct MixupResult {
  Tensor inputs;
  Tensor labels;  // row distributions
  float lambda_mix;
};

// Convex combination of two batches with lambda_mix ~ Beta(alpha, alpha),
// one draw per batch.
MixupResult mixup(const Tensor& batch_a, const Tensor& batch_b, const Tensor& labels_a,
                  const Tensor& labels_b, float mixup_alpha, RngStream& rng);

struct PseudoLabeledPool {
  Tensor inputs;
  std::vector<int> labels;  // provenance: argmax of a standard-trained model
  int size() const { return static_cast<int>(labels.size()); }
};

// Argmax labels from a standard-trained classifier (no confidence filter).
PseudoLabeledPool pseudo_label(const Model& standard_model, const Tensor& unlabeled_inputs,
                               int batch_size = 256);

struct ComposedBatch {
  Tensor inputs;
  std::vector<int> labels;
  int labeled_count = 0;
  int pseudo_count = 0;
};

// ceil(fraction * batch_size) labeled examples (drawn without replacement
// from labeled_inputs) plus pool examples for the remainder, shuffled.
ComposedBatch compose_semisup_batch(const Tensor& labeled_inputs, const std::vector<int>& labeled_labels,
                                    const PseudoLabeledPool& pool, int batch_size, float fraction,
                                    RngStream& rng);

}  // namespace robustlab
