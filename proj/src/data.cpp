#include "robustlab/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "robustlab/rng.hpp"

namespace robustlab {

namespace {

constexpr uint32_t kIdxImagesMagic = 0x00000803;
constexpr uint32_t kIdxLabelsMagic = 0x00000801;

uint32_t read_be32(std::istream& in, const std::string& path, int64_t offset) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4)) {
    throw std::runtime_error(path + ": truncated at byte " + std::to_string(offset));
  }
  return (static_cast<uint32_t>(buf[0]) << 24) | (static_cast<uint32_t>(buf[1]) << 16) |
         (static_cast<uint32_t>(buf[2]) << 8) | static_cast<uint32_t>(buf[3]);
}

void write_be32(std::ostream& out, uint32_t v) {
  const unsigned char buf[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(buf), 4);
}

std::vector<int> identity_permutation(int n) {
  std::vector<int> idx(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
  return idx;
}

void fisher_yates(std::vector<int>& idx, RngStream& rng) {
  for (int i = static_cast<int>(idx.size()) - 1; i > 0; --i)
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(rng.uniform_int(i + 1))]);
}

}  // namespace

Dataset Dataset::subset(const std::vector<int>& indices) const {
  Dataset out;
  out.tag = tag;
  std::vector<int> sh = inputs.shape;
  sh[0] = static_cast<int>(indices.size());
  out.inputs = Tensor(sh);
  const int64_t d = inputs.numel() / inputs.shape[0];
  if (!labels.empty()) out.labels.resize(indices.size());
  for (size_t i = 0; i < indices.size(); ++i) {
    const int src = indices[i];
    std::copy_n(inputs.data.begin() + static_cast<int64_t>(src) * d, d,
                out.inputs.data.begin() + static_cast<int64_t>(i) * d);
    if (!labels.empty()) out.labels[i] = labels[static_cast<size_t>(src)];
  }
  return out;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error(images_path + ": cannot open");
  const uint32_t imagic = read_be32(img, images_path, 0);
  if (imagic != kIdxImagesMagic) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "0x%08x", imagic);
    throw std::runtime_error(images_path + ": bad magic " + buf + " at byte 0");
  }
  const int n = static_cast<int>(read_be32(img, images_path, 4));
  const int h = static_cast<int>(read_be32(img, images_path, 8));
  const int w = static_cast<int>(read_be32(img, images_path, 12));
  if (n < 1 || h < 1 || w < 1)
    throw std::runtime_error(images_path + ": empty payload (dims " + std::to_string(n) + "x" +
                             std::to_string(h) + "x" + std::to_string(w) + ")");
  const int64_t count = static_cast<int64_t>(n) * h * w;
  std::vector<unsigned char> pixels(static_cast<size_t>(count));
  if (!img.read(reinterpret_cast<char*>(pixels.data()), count))
    throw std::runtime_error(images_path + ": truncated at byte " +
                             std::to_string(16 + img.gcount()));

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error(labels_path + ": cannot open");
  const uint32_t lmagic = read_be32(lab, labels_path, 0);
  if (lmagic != kIdxLabelsMagic) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "0x%08x", lmagic);
    throw std::runtime_error(labels_path + ": bad magic " + buf + " at byte 0");
  }
  const int ln = static_cast<int>(read_be32(lab, labels_path, 4));
  if (ln != n)
    throw std::runtime_error(labels_path + ": label count " + std::to_string(ln) +
                             " does not match image count " + std::to_string(n));
  std::vector<unsigned char> raw(static_cast<size_t>(n));
  if (!lab.read(reinterpret_cast<char*>(raw.data()), n))
    throw std::runtime_error(labels_path + ": truncated at byte " + std::to_string(8 + lab.gcount()));

  Dataset ds;
  ds.inputs = Tensor({n, 1, h, w});
  for (int64_t i = 0; i < count; ++i)
    ds.inputs.data[static_cast<size_t>(i)] = static_cast<float>(pixels[static_cast<size_t>(i)]) / 255.0f;
  ds.labels.assign(raw.begin(), raw.end());
  return ds;
}

void write_idx(const Dataset& ds, const std::string& images_path, const std::string& labels_path) {
  if (ds.inputs.ndim() != 4 || ds.inputs.shape[1] != 1)
    throw std::invalid_argument("write_idx: expected single-channel [N,1,H,W] inputs");
  if (ds.labels.size() != static_cast<size_t>(ds.size()))
    throw std::invalid_argument("write_idx: label count mismatch");
  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error(images_path + ": cannot open for writing");
  write_be32(img, kIdxImagesMagic);
  write_be32(img, static_cast<uint32_t>(ds.size()));
  write_be32(img, static_cast<uint32_t>(ds.inputs.shape[2]));
  write_be32(img, static_cast<uint32_t>(ds.inputs.shape[3]));
  for (float v : ds.inputs.data) {
    const int q = static_cast<int>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
    const unsigned char b = static_cast<unsigned char>(q);
    img.write(reinterpret_cast<const char*>(&b), 1);
  }
  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error(labels_path + ": cannot open for writing");
  write_be32(lab, kIdxLabelsMagic);
  write_be32(lab, static_cast<uint32_t>(ds.size()));
  for (int y : ds.labels) {
    const unsigned char b = static_cast<unsigned char>(y);
    lab.write(reinterpret_cast<const char*>(&b), 1);
  }
}

Dataset gen_synthetic(SynthKind kind, int n, int d, float margin, uint64_t seed) {
  if (n < 1 || d < 1) throw std::invalid_argument("gen_synthetic: n and d must be >= 1");
  if (kind == SynthKind::rings && d < 2)
    throw std::invalid_argument("gen_synthetic: rings needs d >= 2");
  RngStream rng(derive(seed, StreamTag::synthetic, {static_cast<uint64_t>(kind)}));
  Dataset ds;
  ds.inputs = Tensor({n, 1, 1, d});
  ds.labels.resize(static_cast<size_t>(n));
  if (kind == SynthKind::two_gaussians) {
    // map +-(margin+3) sigma into [0,1]
    const float scale = 0.5f / (margin + 3.0f);
    for (int i = 0; i < n; ++i) {
      const int y = i % 2;
      ds.labels[static_cast<size_t>(i)] = y;
      for (int j = 0; j < d; ++j) {
        float z = rng.normal();
        if (j == 0) z += (y == 0 ? -margin : margin);
        ds.inputs.data[static_cast<size_t>(i) * d + j] = std::clamp(0.5f + z * scale, 0.0f, 1.0f);
      }
    }
  } else {
    for (int i = 0; i < n; ++i) {
      const int y = i % 2;
      ds.labels[static_cast<size_t>(i)] = y;
      const float radius = (y == 0 ? 0.15f : 0.15f + 0.05f * margin) + 0.01f * rng.normal();
      const float theta = rng.uniform(0.0f, 2.0f * 3.14159265f);
      float* row = ds.inputs.data.data() + static_cast<size_t>(i) * d;
      row[0] = std::clamp(0.5f + radius * std::cos(theta), 0.0f, 1.0f);
      row[1] = std::clamp(0.5f + radius * std::sin(theta), 0.0f, 1.0f);
      for (int j = 2; j < d; ++j) row[j] = 0.5f;
    }
  }
  return ds;
}

Dataset gen_pattern_images(int n, int classes, int side, float noise, uint64_t seed) {
  if (n < 1 || classes < 2 || side < 4)
    throw std::invalid_argument("gen_pattern_images: need n >= 1, classes >= 2, side >= 4");
  RngStream rng(derive(seed, StreamTag::synthetic, {0xB0A7ull}));
  Dataset ds;
  ds.inputs = Tensor({n, 1, side, side});
  ds.labels.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int y = rng.uniform_int(classes);
    ds.labels[static_cast<size_t>(i)] = y;
    // class pattern: oriented bars with class-dependent phase and period
    const int period = 2 + y % 4;
    const bool vertical = (y / 4) % 2 == 0;
    const int phase = y % period;
    const float jx = rng.uniform(-0.5f, 0.5f);
    for (int h = 0; h < side; ++h) {
      for (int w = 0; w < side; ++w) {
        const int t = vertical ? w : h;
        float v = ((t + phase) % period) < (period + 1) / 2 ? 0.85f : 0.15f;
        if (y >= 8) v = ((h + w + phase) % period) < (period + 1) / 2 ? 0.85f : 0.15f;
        v += jx * 0.1f + noise * rng.normal();
        ds.inputs.at4(i, 0, h, w) = std::clamp(v, 0.0f, 1.0f);
      }
    }
  }
  return ds;
}

std::pair<Dataset, Dataset> split_holdout(const Dataset& ds, int count, uint64_t seed) {
  const int n = ds.size();
  if (count < 0) throw std::invalid_argument("split_holdout: count must be >= 0");
  if (count >= n)
    throw std::invalid_argument("split_holdout: holdout " + std::to_string(count) +
                                " leaves no training data from " + std::to_string(n));
  std::vector<int> idx = identity_permutation(n);
  RngStream rng(derive(seed, StreamTag::holdout_split));
  fisher_yates(idx, rng);
  const std::vector<int> val_idx(idx.begin(), idx.begin() + count);
  const std::vector<int> train_idx(idx.begin() + count, idx.end());
  Dataset val = ds.subset(val_idx);
  val.tag = SplitTag::val;
  Dataset train = ds.subset(train_idx);
  train.tag = SplitTag::train;
  return {std::move(train), std::move(val)};
}

}  // namespace robustlab
