#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "robustlab/tensor.hpp"

namespace robustlab {

using NodeId = int32_t;

enum class Op : uint8_t {
  leaf,
  matmul,
  conv2d,
  avg_pool2,
  relu,
  add,
  add_bias,
  scale,
  reshape,
  reduce_sum,
  sum_abs,
  sum_sq,
  cross_entropy,
  cross_entropy_soft,
};

struct TapeNode {
  Op op = Op::leaf;
  NodeId a = -1;
  NodeId b = -1;
  Tensor value;
  bool requires_grad = false;  // leaves only
  int stride = 1;
  int pad = 0;
  float factor = 0.0f;
  std::vector<int> labels;  // cross_entropy
  Tensor targets;           // cross_entropy_soft
  Tensor softmax;           // cached probabilities for both cross-entropy ops
};

// Gradients of a scalar root with respect to differentiable leaves, keyed by
// node id. A missing entry means the gradient is identically zero.
struct Gradients {
  std::map<NodeId, Tensor> by_node;

  const Tensor* find(NodeId id) const {
    auto it = by_node.find(id);
    return it == by_node.end() ? nullptr : &it->second;
  }
};

// Record of one forward computation. Nodes are appended in topological order
// (parents always precede children); all kernels accumulate in a fixed
// sequential order, so identical inputs give bit-identical values and
// gradients.
class Tape {
 public:
  NodeId leaf(Tensor value, bool requires_grad = false);

  // c[i,j] = sum_t a[i,t] * b[t,j], t ascending
  NodeId matmul(NodeId a, NodeId b);
  // cross-correlation, x: [N,C,H,W], w: [F,C,k,k]
  NodeId conv2d(NodeId x, NodeId w, int stride, int pad);
  // 2x2 mean pooling, stride 2, trailing odd row/column dropped
  NodeId avg_pool2(NodeId x);
  NodeId relu(NodeId x);
  NodeId add(NodeId a, NodeId b);
  // bias broadcast: x [N,K] + b [K], or x [N,C,H,W] + b [C]
  NodeId add_bias(NodeId x, NodeId bias);
  NodeId scale(NodeId x, float factor);
  NodeId reshape(NodeId x, std::vector<int> shape);
  NodeId reduce_sum(NodeId x);
  NodeId sum_abs(NodeId x);
  NodeId sum_sq(NodeId x);
  // mean over the batch of -log softmax(logits)[label]
  NodeId cross_entropy(NodeId logits, std::vector<int> labels);
  // same with per-row target distributions
  NodeId cross_entropy_soft(NodeId logits, Tensor targets);

  const Tensor& value(NodeId id) const { return nodes_[static_cast<size_t>(id)].value; }
  const TapeNode& node(NodeId id) const { return nodes_[static_cast<size_t>(id)]; }
  size_t size() const { return nodes_.size(); }

  // Recompute a node's value from leaf values through the same kernels;
  // bit-equal to value(id) by construction, used to validate recording.
  Tensor replay(NodeId id) const;

 private:
  NodeId push(TapeNode n);
  const Tensor& val(NodeId id) const { return nodes_[static_cast<size_t>(id)].value; }
  std::vector<TapeNode> nodes_;
};

// Reverse sweep from a scalar root; returns gradients for every leaf marked
// differentiable. Rejects non-scalar roots.
Gradients backward(const Tape& tape, NodeId root);

// Per-example cross-entropy losses (needed for restart selection and error
// accounting; not a tape op).
std::vector<float> per_example_cross_entropy(const Tensor& logits, const std::vector<int>& labels);
std::vector<float> per_example_cross_entropy_soft(const Tensor& logits, const Tensor& targets);
std::vector<int> argmax_rows(const Tensor& logits);

}  // namespace robustlab
