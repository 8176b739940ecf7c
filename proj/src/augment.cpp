#include "robustlab/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace robustlab {

void validate(const RegularizerSpec& spec) {
  if (spec.lambda < 0.0f) throw std::invalid_argument("regularizer: lambda must be >= 0");
  if (spec.patch_len < 0) throw std::invalid_argument("regularizer: patch_len must be >= 0");
  if (spec.mixup_alpha <= 0.0f) throw std::invalid_argument("regularizer: mixup_alpha must be > 0");
  if (spec.labeled_fraction <= 0.0f || spec.labeled_fraction > 1.0f)
    throw std::invalid_argument("regularizer: labeled_fraction must be in (0,1]");
}

NodeId penalty(Tape& tape, const std::vector<NodeId>& weight_nodes, RegKind kind, float lambda) {
  if (kind != RegKind::l1 && kind != RegKind::l2)
    throw std::invalid_argument("penalty: kind must be l1 or l2");
  if (weight_nodes.empty()) return tape.leaf(Tensor::scalar(0.0f));
  NodeId acc = -1;
  for (NodeId w : weight_nodes) {
    NodeId term = kind == RegKind::l1 ? tape.sum_abs(w) : tape.sum_sq(w);
    acc = acc < 0 ? term : tape.add(acc, term);
  }
  return tape.scale(acc, lambda);
}

double penalty_value(const std::vector<const Tensor*>& weights, RegKind kind, float lambda) {
  if (kind != RegKind::l1 && kind != RegKind::l2)
    throw std::invalid_argument("penalty: kind must be l1 or l2");
  double acc = 0.0;
  for (const Tensor* w : weights)
    for (float v : w->data)
      acc += kind == RegKind::l1 ? std::fabs(static_cast<double>(v))
                                 : static_cast<double>(v) * static_cast<double>(v);
  return static_cast<double>(lambda) * acc;
}

Tensor cutout(const Tensor& batch, int patch_len, RngStream& rng) {
  if (patch_len < 0) throw std::invalid_argument("cutout: patch_len must be >= 0");
  if (batch.ndim() != 4) throw std::invalid_argument("cutout: expected [N,C,H,W], got " + shape_str(batch.shape));
  Tensor out = batch;
  if (patch_len == 0) return out;
  const int N = batch.shape[0], C = batch.shape[1], H = batch.shape[2], W = batch.shape[3];
  for (int n = 0; n < N; ++n) {
    const int ch = rng.uniform_int(H);
    const int cw = rng.uniform_int(W);
    const int h0 = std::max(0, ch - patch_len / 2);
    const int h1 = std::min(H, ch - patch_len / 2 + patch_len);
    const int w0 = std::max(0, cw - patch_len / 2);
    const int w1 = std::min(W, cw - patch_len / 2 + patch_len);
    for (int c = 0; c < C; ++c)
      for (int h = h0; h < h1; ++h)
        for (int w = w0; w < w1; ++w) out.at4(n, c, h, w) = 0.0f;
  }
  return out;
}

Tensor one_hot(const std::vector<int>& labels, int num_classes) {
  Tensor out({static_cast<int>(labels.size()), num_classes});
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes)
      throw std::invalid_argument("one_hot: label " + std::to_string(labels[i]) + " out of range");
    out.at2(static_cast<int>(i), labels[i]) = 1.0f;
  }
  return out;
}

MixupResult mixup(const Tensor& batch_a, const Tensor& batch_b, const Tensor& labels_a,
                  const Tensor& labels_b, float mixup_alpha, RngStream& rng) {
  if (!batch_a.same_shape(batch_b))
    throw std::invalid_argument("mixup: batch shapes differ");
  if (!labels_a.same_shape(labels_b) || labels_a.ndim() != 2 ||
      labels_a.shape[0] != batch_a.shape[0])
    throw std::invalid_argument("mixup: label distributions must be [N,K] matching the batch");
  if (mixup_alpha <= 0.0f) throw std::invalid_argument("mixup: alpha must be > 0");

  const float lam = rng.beta(mixup_alpha, mixup_alpha);
  MixupResult out;
  out.lambda_mix = lam;
  out.inputs = batch_a;
  for (size_t j = 0; j < out.inputs.data.size(); ++j)
    out.inputs.data[j] = lam * batch_a.data[j] + (1.0f - lam) * batch_b.data[j];
  out.labels = labels_a;
  for (size_t j = 0; j < out.labels.data.size(); ++j)
    out.labels.data[j] = lam * labels_a.data[j] + (1.0f - lam) * labels_b.data[j];
  return out;
}

PseudoLabeledPool pseudo_label(const Model& standard_model, const Tensor& unlabeled_inputs,
                               int batch_size) {
  if (unlabeled_inputs.ndim() < 2)
    throw std::invalid_argument("pseudo_label: expected a batched input tensor");
  const int n = unlabeled_inputs.shape[0];
  const int64_t d = unlabeled_inputs.numel() / n;
  PseudoLabeledPool pool;
  pool.inputs = unlabeled_inputs;
  pool.labels.reserve(static_cast<size_t>(n));
  for (int start = 0; start < n; start += batch_size) {
    const int count = std::min(batch_size, n - start);
    std::vector<int> sh = unlabeled_inputs.shape;
    sh[0] = count;
    Tensor chunk(sh);
    std::copy_n(unlabeled_inputs.data.begin() + static_cast<int64_t>(start) * d, count * d,
                chunk.data.begin());
    for (int lbl : argmax_rows(forward(standard_model, chunk))) pool.labels.push_back(lbl);
  }
  return pool;
}

ComposedBatch compose_semisup_batch(const Tensor& labeled_inputs, const std::vector<int>& labeled_labels,
                                    const PseudoLabeledPool& pool, int batch_size, float fraction,
                                    RngStream& rng) {
  if (batch_size < 1) throw std::invalid_argument("compose_semisup_batch: batch_size must be >= 1");
  if (fraction <= 0.0f || fraction > 1.0f)
    throw std::invalid_argument("compose_semisup_batch: fraction must be in (0,1]");
  const int n_labeled = static_cast<int>(labeled_labels.size());
  if (n_labeled < 1) throw std::invalid_argument("compose_semisup_batch: labeled source is empty");
  const int k = static_cast<int>(std::ceil(static_cast<double>(fraction) * batch_size));
  const int p = batch_size - k;
  if (p > 0 && pool.size() == 0)
    throw std::invalid_argument("compose_semisup_batch: pseudo-labeled pool is empty");

  // draw labeled indices without replacement (partial Fisher-Yates)
  std::vector<int> idx(static_cast<size_t>(n_labeled));
  for (int i = 0; i < n_labeled; ++i) idx[static_cast<size_t>(i)] = i;
  const int take = std::min(k, n_labeled);
  for (int i = 0; i < take; ++i)
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(i + rng.uniform_int(n_labeled - i))]);

  struct Pick {
    bool pseudo;
    int index;
  };
  std::vector<Pick> picks;
  picks.reserve(static_cast<size_t>(batch_size));
  for (int i = 0; i < k; ++i) picks.push_back({false, idx[static_cast<size_t>(i % n_labeled)]});
  for (int i = 0; i < p; ++i) picks.push_back({true, rng.uniform_int(pool.size())});
  for (int i = batch_size - 1; i > 0; --i)
    std::swap(picks[static_cast<size_t>(i)], picks[static_cast<size_t>(rng.uniform_int(i + 1))]);

  const int64_t d = labeled_inputs.numel() / labeled_inputs.shape[0];
  std::vector<int> sh = labeled_inputs.shape;
  sh[0] = batch_size;
  ComposedBatch out;
  out.inputs = Tensor(sh);
  out.labels.resize(static_cast<size_t>(batch_size));
  out.labeled_count = k;
  out.pseudo_count = p;
  for (int i = 0; i < batch_size; ++i) {
    const auto& pk = picks[static_cast<size_t>(i)];
    const Tensor& src = pk.pseudo ? pool.inputs : labeled_inputs;
    std::copy_n(src.data.begin() + static_cast<int64_t>(pk.index) * d, d,
                out.inputs.data.begin() + static_cast<int64_t>(i) * d);
    out.labels[static_cast<size_t>(i)] =
        pk.pseudo ? pool.labels[static_cast<size_t>(pk.index)] : labeled_labels[static_cast<size_t>(pk.index)];
  }
  return out;
}

}  // namespace robustlab
