#include "robustlab/nets.hpp"

#include <cmath>
#include <stdexcept>

#include "robustlab/rng.hpp"

namespace robustlab {

namespace {

constexpr int kMlpBaseWidth = 64;
constexpr int kCnnBaseChannels[2] = {16, 32};
constexpr int kConvKernel = 3;

int flat_input_dim(const ModelSpec& spec) {
  int d = 1;
  for (int e : spec.input_shape) d *= e;
  return d;
}

int cnn_stage_channels(const ModelSpec& spec, int stage) {
  return kCnnBaseChannels[stage == 0 ? 0 : 1] * spec.width_factor;
}

}  // namespace

void validate(const ModelSpec& spec) {
  if (spec.width_factor < 1) throw std::invalid_argument("model: width_factor must be >= 1");
  if (spec.num_classes < 2) throw std::invalid_argument("model: num_classes must be >= 2");
  if (spec.depth < 0) throw std::invalid_argument("model: depth must be >= 0");
  if (spec.input_shape.empty()) throw std::invalid_argument("model: input_shape is empty");
  for (int e : spec.input_shape)
    if (e < 1) throw std::invalid_argument("model: input_shape extents must be positive");
  if (spec.family == Family::cnn) {
    if (spec.input_shape.size() != 3)
      throw std::invalid_argument("model: cnn input_shape must be [C,H,W], got " +
                                  shape_str(spec.input_shape));
    if (spec.depth < 1) throw std::invalid_argument("model: cnn depth must be >= 1");
    int h = spec.input_shape[1], w = spec.input_shape[2];
    for (int s = 0; s < spec.depth; ++s) {
      if (h < 2 || w < 2)
        throw std::invalid_argument("model: input too small for " + std::to_string(spec.depth) +
                                    " conv stages");
      h /= 2;
      w /= 2;
    }
  }
}

std::vector<ParamShape> shape_plan(const ModelSpec& spec) {
  validate(spec);
  std::vector<ParamShape> plan;
  if (spec.family == Family::mlp) {
    int in = flat_input_dim(spec);
    for (int l = 0; l < spec.depth; ++l) {
      const int out = kMlpBaseWidth * spec.width_factor;
      plan.push_back({"fc" + std::to_string(l) + ".weight", ParamTag::weight, {in, out}});
      plan.push_back({"fc" + std::to_string(l) + ".bias", ParamTag::bias, {out}});
      in = out;
    }
    plan.push_back({"head.weight", ParamTag::weight, {in, spec.num_classes}});
    plan.push_back({"head.bias", ParamTag::bias, {spec.num_classes}});
  } else {
    int c = spec.input_shape[0];
    int h = spec.input_shape[1], w = spec.input_shape[2];
    for (int s = 0; s < spec.depth; ++s) {
      const int f = cnn_stage_channels(spec, s);
      plan.push_back({"conv" + std::to_string(s) + ".weight", ParamTag::weight, {f, c, kConvKernel, kConvKernel}});
      plan.push_back({"conv" + std::to_string(s) + ".bias", ParamTag::bias, {f}});
      c = f;
      h /= 2;
      w /= 2;
    }
    plan.push_back({"head.weight", ParamTag::weight, {c * h * w, spec.num_classes}});
    plan.push_back({"head.bias", ParamTag::bias, {spec.num_classes}});
  }
  return plan;
}

int64_t param_count(const ModelSpec& spec) {
  int64_t n = 0;
  for (const auto& p : shape_plan(spec)) n += numel_of(p.shape);
  return n;
}

Model build(const ModelSpec& spec, uint64_t seed) {
  Model m;
  m.spec = spec;
  const auto plan = shape_plan(spec);
  for (size_t i = 0; i < plan.size(); ++i) {
    Param p;
    p.name = plan[i].name;
    p.tag = plan[i].tag;
    p.value = Tensor(plan[i].shape);
    if (p.tag == ParamTag::weight) {
      // fan_in: rows of an [in,out] matrix, C*k*k of an [F,C,k,k] kernel
      int64_t fan_in = plan[i].shape.size() == 2
                           ? plan[i].shape[0]
                           : static_cast<int64_t>(plan[i].shape[1]) * plan[i].shape[2] * plan[i].shape[3];
      const float bound = std::sqrt(6.0f / static_cast<float>(fan_in));
      RngStream rng(derive(seed, StreamTag::model_init, {static_cast<uint64_t>(i)}));
      for (float& v : p.value.data) v = rng.uniform(-bound, bound);
    }
    m.params.push_back(std::move(p));
  }
  return m;
}

NodeId forward_on_tape(const Model& m, Tape& tape, NodeId x, std::vector<NodeId>* param_ids) {
  // copy: pushing leaves may reallocate the tape's node storage
  const std::vector<int> in_shape = tape.value(x).shape;
  const int64_t in_numel = tape.value(x).numel();
  std::vector<int> expected = {in_shape.empty() ? 0 : in_shape[0]};
  expected.insert(expected.end(), m.spec.input_shape.begin(), m.spec.input_shape.end());
  if (in_shape != expected) {
    throw std::invalid_argument("forward: input " + shape_str(in_shape) +
                                " does not match batched input_shape " + shape_str(expected));
  }
  const int batch = in_shape[0];

  std::vector<NodeId> ids(m.params.size());
  for (size_t i = 0; i < m.params.size(); ++i)
    ids[i] = tape.leaf(m.params[i].value, param_ids != nullptr);
  if (param_ids) *param_ids = ids;

  NodeId h = x;
  size_t pi = 0;
  if (m.spec.family == Family::mlp) {
    h = tape.reshape(h, {batch, static_cast<int>(in_numel / batch)});
    for (int l = 0; l < m.spec.depth; ++l) {
      h = tape.add_bias(tape.matmul(h, ids[pi]), ids[pi + 1]);
      h = tape.relu(h);
      pi += 2;
    }
  } else {
    if (in_shape.size() != 4)
      throw std::invalid_argument("forward: cnn input must be 4-d, got " + shape_str(in_shape));
    for (int s = 0; s < m.spec.depth; ++s) {
      h = tape.add_bias(tape.conv2d(h, ids[pi], 1, 1), ids[pi + 1]);
      h = tape.relu(h);
      h = tape.avg_pool2(h);
      pi += 2;
    }
    const int64_t flat = tape.value(h).numel() / batch;
    h = tape.reshape(h, {batch, static_cast<int>(flat)});
  }
  return tape.add_bias(tape.matmul(h, ids[pi]), ids[pi + 1]);
}

Tensor forward(const Model& m, const Tensor& x) {
  Tape tape;
  NodeId xid = tape.leaf(x);
  return tape.value(forward_on_tape(m, tape, xid));
}

std::vector<const Tensor*> penalizable_params(const Model& m) {
  std::vector<const Tensor*> out;
  for (const auto& p : m.params)
    if (p.tag == ParamTag::weight) out.push_back(&p.value);
  return out;
}

std::vector<size_t> penalizable_param_indices(const Model& m) {
  std::vector<size_t> out;
  for (size_t i = 0; i < m.params.size(); ++i)
    if (m.params[i].tag == ParamTag::weight) out.push_back(i);
  return out;
}

}  // namespace robustlab
