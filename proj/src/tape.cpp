#include "robustlab/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace robustlab {

namespace {

void matmul_f32(const Tensor& a, const Tensor& b, Tensor& out) {
  const int m = a.shape[0], k = a.shape[1], n = b.shape[1];
  for (int i = 0; i < m; ++i) {
    float* orow = &out.data[static_cast<size_t>(i) * n];
    for (int t = 0; t < k; ++t) {
      const float av = a.at2(i, t);
      const float* brow = &b.data[static_cast<size_t>(t) * n];
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

// out[i,j] += sum_t g[i,t] * b[j,t]   (g * b^T)
void matmul_bt(const Tensor& g, const Tensor& b, Tensor& out) {
  const int m = g.shape[0], n = g.shape[1], k = b.shape[0];
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < k; ++j) {
      float acc = 0.0f;
      for (int t = 0; t < n; ++t) acc += g.at2(i, t) * b.at2(j, t);
      out.at2(i, j) += acc;
    }
  }
}

// out[i,j] += sum_t a[t,i] * g[t,j]   (a^T * g)
void matmul_at(const Tensor& a, const Tensor& g, Tensor& out) {
  const int k = a.shape[0], m = a.shape[1], n = g.shape[1];
  for (int t = 0; t < k; ++t) {
    for (int i = 0; i < m; ++i) {
      const float av = a.at2(t, i);
      for (int j = 0; j < n; ++j) out.at2(i, j) += av * g.at2(t, j);
    }
  }
}

std::vector<int> conv_out_shape(const Tensor& x, const Tensor& w, int stride, int pad) {
  if (x.ndim() != 4 || w.ndim() != 4) {
    throw std::invalid_argument("conv2d: expected 4-d input and kernel, got " +
                                shape_str(x.shape) + " and " + shape_str(w.shape));
  }
  if (x.shape[1] != w.shape[1]) {
    throw std::invalid_argument("conv2d: channel mismatch, input " + shape_str(x.shape) +
                                " vs kernel " + shape_str(w.shape));
  }
  if (w.shape[2] != w.shape[3]) {
    throw std::invalid_argument("conv2d: kernel must be square, got " + shape_str(w.shape));
  }
  if (stride < 1 || pad < 0) throw std::invalid_argument("conv2d: bad stride/pad");
  const int k = w.shape[2];
  const int hin = x.shape[2] + 2 * pad, win = x.shape[3] + 2 * pad;
  if (k > hin || k > win) {
    throw std::invalid_argument("conv2d: kernel " + std::to_string(k) +
                                " exceeds padded input " + shape_str(x.shape));
  }
  if ((hin - k) % stride != 0 || (win - k) % stride != 0) {
    throw std::invalid_argument("conv2d: non-integral output extent for input " +
                                shape_str(x.shape) + ", kernel " + std::to_string(k) +
                                ", stride " + std::to_string(stride) + ", pad " +
                                std::to_string(pad));
  }
  return {x.shape[0], w.shape[0], (hin - k) / stride + 1, (win - k) / stride + 1};
}

void conv2d_f32(const Tensor& x, const Tensor& w, int stride, int pad, Tensor& out) {
  const int N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
  const int F = w.shape[0], K = w.shape[2];
  const int OH = out.shape[2], OW = out.shape[3];
  for (int n = 0; n < N; ++n) {
    for (int f = 0; f < F; ++f) {
      for (int c = 0; c < C; ++c) {
        for (int kh = 0; kh < K; ++kh) {
          for (int kw = 0; kw < K; ++kw) {
            const float wv = w.at4(f, c, kh, kw);
            for (int oh = 0; oh < OH; ++oh) {
              const int h = oh * stride - pad + kh;
              if (h < 0 || h >= H) continue;
              for (int ow = 0; ow < OW; ++ow) {
                const int wi = ow * stride - pad + kw;
                if (wi < 0 || wi >= W) continue;
                out.at4(n, f, oh, ow) += wv * x.at4(n, c, h, wi);
              }
            }
          }
        }
      }
    }
  }
}

void conv2d_grad_x(const Tensor& g, const Tensor& w, int stride, int pad, Tensor& gx) {
  const int N = gx.shape[0], C = gx.shape[1], H = gx.shape[2], W = gx.shape[3];
  const int F = w.shape[0], K = w.shape[2];
  const int OH = g.shape[2], OW = g.shape[3];
  for (int n = 0; n < N; ++n) {
    for (int f = 0; f < F; ++f) {
      for (int c = 0; c < C; ++c) {
        for (int kh = 0; kh < K; ++kh) {
          for (int kw = 0; kw < K; ++kw) {
            const float wv = w.at4(f, c, kh, kw);
            for (int oh = 0; oh < OH; ++oh) {
              const int h = oh * stride - pad + kh;
              if (h < 0 || h >= H) continue;
              for (int ow = 0; ow < OW; ++ow) {
                const int wi = ow * stride - pad + kw;
                if (wi < 0 || wi >= W) continue;
                gx.at4(n, c, h, wi) += wv * g.at4(n, f, oh, ow);
              }
            }
          }
        }
      }
    }
  }
}

void conv2d_grad_w(const Tensor& g, const Tensor& x, int stride, int pad, Tensor& gw) {
  const int N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
  const int F = gw.shape[0], K = gw.shape[2];
  const int OH = g.shape[2], OW = g.shape[3];
  for (int n = 0; n < N; ++n) {
    for (int f = 0; f < F; ++f) {
      for (int c = 0; c < C; ++c) {
        for (int kh = 0; kh < K; ++kh) {
          for (int kw = 0; kw < K; ++kw) {
            float acc = 0.0f;
            for (int oh = 0; oh < OH; ++oh) {
              const int h = oh * stride - pad + kh;
              if (h < 0 || h >= H) continue;
              for (int ow = 0; ow < OW; ++ow) {
                const int wi = ow * stride - pad + kw;
                if (wi < 0 || wi >= W) continue;
                acc += g.at4(n, f, oh, ow) * x.at4(n, c, h, wi);
              }
            }
            gw.at4(f, c, kh, kw) += acc;
          }
        }
      }
    }
  }
}

void softmax_rows(const Tensor& logits, Tensor& probs) {
  const int n = logits.shape[0], k = logits.shape[1];
  for (int i = 0; i < n; ++i) {
    float mx = logits.at2(i, 0);
    for (int j = 1; j < k; ++j) mx = std::max(mx, logits.at2(i, j));
    float denom = 0.0f;
    for (int j = 0; j < k; ++j) {
      const float e = std::exp(logits.at2(i, j) - mx);
      probs.at2(i, j) = e;
      denom += e;
    }
    for (int j = 0; j < k; ++j) probs.at2(i, j) /= denom;
  }
}

float ce_row(const Tensor& logits, int i, int label) {
  const int k = logits.shape[1];
  float mx = logits.at2(i, 0);
  for (int j = 1; j < k; ++j) mx = std::max(mx, logits.at2(i, j));
  float denom = 0.0f;
  for (int j = 0; j < k; ++j) denom += std::exp(logits.at2(i, j) - mx);
  return std::log(denom) - (logits.at2(i, label) - mx);
}

void check_logits_2d(const Tensor& logits) {
  if (logits.ndim() != 2) {
    throw std::invalid_argument("cross_entropy: logits must be 2-d, got " + shape_str(logits.shape));
  }
}

}  // namespace

NodeId Tape::push(TapeNode n) {
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::leaf(Tensor value, bool requires_grad) {
  TapeNode n;
  n.op = Op::leaf;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (ta.ndim() != 2 || tb.ndim() != 2 || ta.shape[1] != tb.shape[0]) {
    throw std::invalid_argument("matmul: incompatible shapes " + shape_str(ta.shape) + " x " +
                                shape_str(tb.shape));
  }
  TapeNode n;
  n.op = Op::matmul;
  n.a = a;
  n.b = b;
  n.value = Tensor({ta.shape[0], tb.shape[1]});
  matmul_f32(ta, tb, n.value);
  return push(std::move(n));
}

NodeId Tape::conv2d(NodeId x, NodeId w, int stride, int pad) {
  const Tensor& tx = val(x);
  const Tensor& tw = val(w);
  TapeNode n;
  n.op = Op::conv2d;
  n.a = x;
  n.b = w;
  n.stride = stride;
  n.pad = pad;
  n.value = Tensor(conv_out_shape(tx, tw, stride, pad));
  conv2d_f32(tx, tw, stride, pad, n.value);
  return push(std::move(n));
}

NodeId Tape::avg_pool2(NodeId x) {
  const Tensor& tx = val(x);
  if (tx.ndim() != 4 || tx.shape[2] < 2 || tx.shape[3] < 2) {
    throw std::invalid_argument("avg_pool2: need 4-d input with H,W >= 2, got " + shape_str(tx.shape));
  }
  TapeNode n;
  n.op = Op::avg_pool2;
  n.a = x;
  n.value = Tensor({tx.shape[0], tx.shape[1], tx.shape[2] / 2, tx.shape[3] / 2});
  const int N = tx.shape[0], C = tx.shape[1], OH = n.value.shape[2], OW = n.value.shape[3];
  for (int b = 0; b < N; ++b)
    for (int c = 0; c < C; ++c)
      for (int h = 0; h < OH; ++h)
        for (int w = 0; w < OW; ++w)
          n.value.at4(b, c, h, w) = 0.25f * (tx.at4(b, c, 2 * h, 2 * w) + tx.at4(b, c, 2 * h, 2 * w + 1) +
                                             tx.at4(b, c, 2 * h + 1, 2 * w) + tx.at4(b, c, 2 * h + 1, 2 * w + 1));
  return push(std::move(n));
}

NodeId Tape::relu(NodeId x) {
  TapeNode n;
  n.op = Op::relu;
  n.a = x;
  n.value = val(x);
  for (float& v : n.value.data) v = v > 0.0f ? v : 0.0f;
  return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (!ta.same_shape(tb)) {
    throw std::invalid_argument("add: shape mismatch " + shape_str(ta.shape) + " vs " +
                                shape_str(tb.shape));
  }
  TapeNode n;
  n.op = Op::add;
  n.a = a;
  n.b = b;
  n.value = ta;
  for (size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] += tb.data[i];
  return push(std::move(n));
}

NodeId Tape::add_bias(NodeId x, NodeId bias) {
  const Tensor& tx = val(x);
  const Tensor& tb = val(bias);
  TapeNode n;
  n.op = Op::add_bias;
  n.a = x;
  n.b = bias;
  n.value = tx;
  if (tx.ndim() == 2 && tb.ndim() == 1 && tb.shape[0] == tx.shape[1]) {
    for (int i = 0; i < tx.shape[0]; ++i)
      for (int j = 0; j < tx.shape[1]; ++j) n.value.at2(i, j) += tb.at(j);
  } else if (tx.ndim() == 4 && tb.ndim() == 1 && tb.shape[0] == tx.shape[1]) {
    for (int b = 0; b < tx.shape[0]; ++b)
      for (int c = 0; c < tx.shape[1]; ++c)
        for (int h = 0; h < tx.shape[2]; ++h)
          for (int w = 0; w < tx.shape[3]; ++w) n.value.at4(b, c, h, w) += tb.at(c);
  } else {
    throw std::invalid_argument("add_bias: unsupported shapes " + shape_str(tx.shape) + " + " +
                                shape_str(tb.shape));
  }
  return push(std::move(n));
}

NodeId Tape::scale(NodeId x, float factor) {
  TapeNode n;
  n.op = Op::scale;
  n.a = x;
  n.factor = factor;
  n.value = val(x);
  for (float& v : n.value.data) v *= factor;
  return push(std::move(n));
}

NodeId Tape::reshape(NodeId x, std::vector<int> shape) {
  const Tensor& tx = val(x);
  if (numel_of(shape) != tx.numel()) {
    throw std::invalid_argument("reshape: cannot view " + shape_str(tx.shape) + " as " +
                                shape_str(shape));
  }
  TapeNode n;
  n.op = Op::reshape;
  n.a = x;
  n.value = Tensor(std::move(shape), tx.data);
  return push(std::move(n));
}

NodeId Tape::reduce_sum(NodeId x) {
  TapeNode n;
  n.op = Op::reduce_sum;
  n.a = x;
  float acc = 0.0f;
  for (float v : val(x).data) acc += v;
  n.value = Tensor::scalar(acc);
  return push(std::move(n));
}

NodeId Tape::sum_abs(NodeId x) {
  TapeNode n;
  n.op = Op::sum_abs;
  n.a = x;
  float acc = 0.0f;
  for (float v : val(x).data) acc += std::fabs(v);
  n.value = Tensor::scalar(acc);
  return push(std::move(n));
}

NodeId Tape::sum_sq(NodeId x) {
  TapeNode n;
  n.op = Op::sum_sq;
  n.a = x;
  float acc = 0.0f;
  for (float v : val(x).data) acc += v * v;
  n.value = Tensor::scalar(acc);
  return push(std::move(n));
}

NodeId Tape::cross_entropy(NodeId logits, std::vector<int> labels) {
  const Tensor& tl = val(logits);
  check_logits_2d(tl);
  if (static_cast<int>(labels.size()) != tl.shape[0]) {
    throw std::invalid_argument("cross_entropy: got " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(tl.shape[0]) + " rows");
  }
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= tl.shape[1]) {
      throw std::invalid_argument("cross_entropy: label " + std::to_string(labels[i]) +
                                  " out of range [0," + std::to_string(tl.shape[1]) + ") at row " +
                                  std::to_string(i));
    }
  }
  TapeNode n;
  n.op = Op::cross_entropy;
  n.a = logits;
  n.labels = std::move(labels);
  n.softmax = Tensor(tl.shape);
  softmax_rows(tl, n.softmax);
  float acc = 0.0f;
  for (int i = 0; i < tl.shape[0]; ++i) acc += ce_row(tl, i, n.labels[static_cast<size_t>(i)]);
  n.value = Tensor::scalar(acc / static_cast<float>(tl.shape[0]));
  return push(std::move(n));
}

NodeId Tape::cross_entropy_soft(NodeId logits, Tensor targets) {
  const Tensor& tl = val(logits);
  check_logits_2d(tl);
  if (!tl.same_shape(targets)) {
    throw std::invalid_argument("cross_entropy_soft: targets " + shape_str(targets.shape) +
                                " do not match logits " + shape_str(tl.shape));
  }
  TapeNode n;
  n.op = Op::cross_entropy_soft;
  n.a = logits;
  n.softmax = Tensor(tl.shape);
  softmax_rows(tl, n.softmax);
  const int rows = tl.shape[0], k = tl.shape[1];
  float acc = 0.0f;
  for (int i = 0; i < rows; ++i) {
    float mx = tl.at2(i, 0);
    for (int j = 1; j < k; ++j) mx = std::max(mx, tl.at2(i, j));
    float denom = 0.0f;
    for (int j = 0; j < k; ++j) denom += std::exp(tl.at2(i, j) - mx);
    const float lse = std::log(denom) + mx;
    float row = 0.0f;
    for (int j = 0; j < k; ++j) row += targets.at2(i, j) * (lse - tl.at2(i, j));
    acc += row;
  }
  n.value = Tensor::scalar(acc / static_cast<float>(rows));
  n.targets = std::move(targets);
  return push(std::move(n));
}

Tensor Tape::replay(NodeId id) const {
  const TapeNode& n = nodes_[static_cast<size_t>(id)];
  switch (n.op) {
    case Op::leaf:
      return n.value;
    case Op::matmul: {
      Tensor out(n.value.shape);
      matmul_f32(replay(n.a), replay(n.b), out);
      return out;
    }
    case Op::conv2d: {
      Tensor out(n.value.shape);
      conv2d_f32(replay(n.a), replay(n.b), n.stride, n.pad, out);
      return out;
    }
    default: {
      // Elementwise/reduction ops recompute through a scratch tape.
      Tape scratch;
      NodeId a = scratch.leaf(replay(n.a));
      switch (n.op) {
        case Op::avg_pool2: return scratch.value(scratch.avg_pool2(a));
        case Op::relu: return scratch.value(scratch.relu(a));
        case Op::add: return scratch.value(scratch.add(a, scratch.leaf(replay(n.b))));
        case Op::add_bias: return scratch.value(scratch.add_bias(a, scratch.leaf(replay(n.b))));
        case Op::scale: return scratch.value(scratch.scale(a, n.factor));
        case Op::reshape: return scratch.value(scratch.reshape(a, n.value.shape));
        case Op::reduce_sum: return scratch.value(scratch.reduce_sum(a));
        case Op::sum_abs: return scratch.value(scratch.sum_abs(a));
        case Op::sum_sq: return scratch.value(scratch.sum_sq(a));
        case Op::cross_entropy: return scratch.value(scratch.cross_entropy(a, n.labels));
        case Op::cross_entropy_soft: return scratch.value(scratch.cross_entropy_soft(a, n.targets));
        default: throw std::logic_error("replay: unhandled op");
      }
    }
  }
}

Gradients backward(const Tape& tape, NodeId root) {
  if (root < 0 || static_cast<size_t>(root) >= tape.size()) {
    throw std::invalid_argument("backward: root node out of range");
  }
  if (!tape.value(root).is_scalar()) {
    throw std::invalid_argument("backward: root must be scalar, got shape " +
                                shape_str(tape.value(root).shape));
  }

  std::vector<Tensor> adj(tape.size());
  std::vector<bool> live(tape.size(), false);
  adj[static_cast<size_t>(root)] = Tensor::scalar(1.0f);
  live[static_cast<size_t>(root)] = true;

  auto accum = [&](NodeId id, const Tensor& g) {
    auto idx = static_cast<size_t>(id);
    if (!live[idx]) {
      adj[idx] = g;
      live[idx] = true;
    } else {
      for (size_t i = 0; i < g.data.size(); ++i) adj[idx].data[i] += g.data[i];
    }
  };

  for (NodeId id = root; id >= 0; --id) {
    const auto idx = static_cast<size_t>(id);
    if (!live[idx]) continue;
    const TapeNode& n = tape.node(id);
    const Tensor& g = adj[idx];
    switch (n.op) {
      case Op::leaf:
        break;
      case Op::matmul: {
        const Tensor& a = tape.value(n.a);
        const Tensor& b = tape.value(n.b);
        Tensor ga(a.shape);
        matmul_bt(g, b, ga);
        accum(n.a, ga);
        Tensor gb(b.shape);
        matmul_at(a, g, gb);
        accum(n.b, gb);
        break;
      }
      case Op::conv2d: {
        const Tensor& x = tape.value(n.a);
        const Tensor& w = tape.value(n.b);
        Tensor gx(x.shape);
        conv2d_grad_x(g, w, n.stride, n.pad, gx);
        accum(n.a, gx);
        Tensor gw(w.shape);
        conv2d_grad_w(g, x, n.stride, n.pad, gw);
        accum(n.b, gw);
        break;
      }
      case Op::avg_pool2: {
        const Tensor& x = tape.value(n.a);
        Tensor gx(x.shape);
        const int N = x.shape[0], C = x.shape[1], OH = n.value.shape[2], OW = n.value.shape[3];
        for (int b = 0; b < N; ++b)
          for (int c = 0; c < C; ++c)
            for (int h = 0; h < OH; ++h)
              for (int w = 0; w < OW; ++w) {
                const float q = 0.25f * g.at4(b, c, h, w);
                gx.at4(b, c, 2 * h, 2 * w) = q;
                gx.at4(b, c, 2 * h, 2 * w + 1) = q;
                gx.at4(b, c, 2 * h + 1, 2 * w) = q;
                gx.at4(b, c, 2 * h + 1, 2 * w + 1) = q;
              }
        accum(n.a, gx);
        break;
      }
      case Op::relu: {
        const Tensor& x = tape.value(n.a);
        Tensor gx(x.shape);
        // gradient at exactly 0 is 0
        for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] = x.data[i] > 0.0f ? g.data[i] : 0.0f;
        accum(n.a, gx);
        break;
      }
      case Op::add:
        accum(n.a, g);
        accum(n.b, g);
        break;
      case Op::add_bias: {
        accum(n.a, g);
        const Tensor& b = tape.value(n.b);
        Tensor gb(b.shape);
        if (g.ndim() == 2) {
          for (int i = 0; i < g.shape[0]; ++i)
            for (int j = 0; j < g.shape[1]; ++j) gb.at(j) += g.at2(i, j);
        } else {
          for (int bb = 0; bb < g.shape[0]; ++bb)
            for (int c = 0; c < g.shape[1]; ++c)
              for (int h = 0; h < g.shape[2]; ++h)
                for (int w = 0; w < g.shape[3]; ++w) gb.at(c) += g.at4(bb, c, h, w);
        }
        accum(n.b, gb);
        break;
      }
      case Op::scale: {
        Tensor gx = g;
        for (float& v : gx.data) v *= n.factor;
        accum(n.a, gx);
        break;
      }
      case Op::reshape: {
        Tensor gx(tape.value(n.a).shape, g.data);
        accum(n.a, gx);
        break;
      }
      case Op::reduce_sum: {
        const float gv = g.at(0);
        accum(n.a, Tensor::full(tape.value(n.a).shape, gv));
        break;
      }
      case Op::sum_abs: {
        const Tensor& x = tape.value(n.a);
        Tensor gx(x.shape);
        const float gv = g.at(0);
        // subgradient at 0 is 0
        for (size_t i = 0; i < gx.data.size(); ++i)
          gx.data[i] = x.data[i] > 0.0f ? gv : (x.data[i] < 0.0f ? -gv : 0.0f);
        accum(n.a, gx);
        break;
      }
      case Op::sum_sq: {
        const Tensor& x = tape.value(n.a);
        Tensor gx(x.shape);
        const float gv = g.at(0);
        for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] = 2.0f * x.data[i] * gv;
        accum(n.a, gx);
        break;
      }
      case Op::cross_entropy: {
        const Tensor& p = n.softmax;
        Tensor gx(p.shape);
        const float gv = g.at(0) / static_cast<float>(p.shape[0]);
        for (int i = 0; i < p.shape[0]; ++i)
          for (int j = 0; j < p.shape[1]; ++j)
            gx.at2(i, j) = (p.at2(i, j) - (j == n.labels[static_cast<size_t>(i)] ? 1.0f : 0.0f)) * gv;
        accum(n.a, gx);
        break;
      }
      case Op::cross_entropy_soft: {
        const Tensor& p = n.softmax;
        Tensor gx(p.shape);
        const float gv = g.at(0) / static_cast<float>(p.shape[0]);
        for (int i = 0; i < p.shape[0]; ++i)
          for (int j = 0; j < p.shape[1]; ++j)
            gx.at2(i, j) = (p.at2(i, j) - n.targets.at2(i, j)) * gv;
        accum(n.a, gx);
        break;
      }
    }
  }

  Gradients out;
  for (NodeId id = 0; static_cast<size_t>(id) < tape.size(); ++id) {
    const TapeNode& n = tape.node(id);
    if (n.op == Op::leaf && n.requires_grad && live[static_cast<size_t>(id)]) {
      out.by_node.emplace(id, std::move(adj[static_cast<size_t>(id)]));
    }
  }
  return out;
}

std::vector<float> per_example_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  check_logits_2d(logits);
  std::vector<float> out(labels.size());
  for (size_t i = 0; i < labels.size(); ++i)
    out[i] = ce_row(logits, static_cast<int>(i), labels[i]);
  return out;
}

std::vector<float> per_example_cross_entropy_soft(const Tensor& logits, const Tensor& targets) {
  check_logits_2d(logits);
  const int rows = logits.shape[0], k = logits.shape[1];
  std::vector<float> out(static_cast<size_t>(rows));
  for (int i = 0; i < rows; ++i) {
    float mx = logits.at2(i, 0);
    for (int j = 1; j < k; ++j) mx = std::max(mx, logits.at2(i, j));
    float denom = 0.0f;
    for (int j = 0; j < k; ++j) denom += std::exp(logits.at2(i, j) - mx);
    const float lse = std::log(denom) + mx;
    float row = 0.0f;
    for (int j = 0; j < k; ++j) row += targets.at2(i, j) * (lse - logits.at2(i, j));
    out[static_cast<size_t>(i)] = row;
  }
  return out;
}

std::vector<int> argmax_rows(const Tensor& logits) {
  check_logits_2d(logits);
  std::vector<int> out(static_cast<size_t>(logits.shape[0]));
  for (int i = 0; i < logits.shape[0]; ++i) {
    int best = 0;
    for (int j = 1; j < logits.shape[1]; ++j)
      if (logits.at2(i, j) > logits.at2(i, best)) best = j;
    out[static_cast<size_t>(i)] = best;
  }
  return out;
}

}  // namespace robustlab
