#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "robustlab/tape.hpp"
#include "robustlab/tensor.hpp"

namespace robustlab {

enum class Family : uint8_t { mlp, cnn };

// Model family f_theta. width_factor scales the hidden width (mlp: 64 per
// hidden layer) or the channel counts (cnn: 16 for the first stage, 32 for
// the rest); depth is the number of hidden layers / conv stages.
struct ModelSpec {
  Family family = Family::mlp;
  int width_factor = 1;
  std::vector<int> input_shape;  // [D] or [C,H,W]
  int num_classes = 10;
  int depth = 1;
};

void validate(const ModelSpec& spec);

enum class ParamTag : uint8_t { weight, bias };

struct Param {
  std::string name;
  ParamTag tag = ParamTag::weight;
  Tensor value;
};

struct Model {
  ModelSpec spec;
  std::vector<Param> params;
};

struct ParamShape {
  std::string name;
  ParamTag tag;
  std::vector<int> shape;
};

// Parameter names/tags/shapes as a deterministic function of the spec; the
// single source of truth for build, checkpoints and parameter counting.
std::vector<ParamShape> shape_plan(const ModelSpec& spec);
int64_t param_count(const ModelSpec& spec);

// Weights from uniform(-sqrt(6/fan_in), +sqrt(6/fan_in)), biases zero.
// Identical (spec, seed) gives a bit-identical model.
Model build(const ModelSpec& spec, uint64_t seed);

// Records the forward pass on the tape. x must be [N, ...input_shape].
// When param_ids is non-null the parameters are bound as differentiable
// leaves and their node ids written out in params order.
NodeId forward_on_tape(const Model& m, Tape& tape, NodeId x, std::vector<NodeId>* param_ids = nullptr);

// Convenience: logits for a batch without keeping the tape around.
Tensor forward(const Model& m, const Tensor& x);

// Exactly the weight-tagged parameters, in params order.
std::vector<const Tensor*> penalizable_params(const Model& m);
std::vector<size_t> penalizable_param_indices(const Model& m);

}  // namespace robustlab
