#include "robustlab/rng.hpp"

#include <cmath>

namespace robustlab {

namespace {
constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;
}

uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

uint64_t derive(uint64_t base, std::initializer_list<uint64_t> parts) {
  uint64_t h = mix64(base + kGolden);
  for (uint64_t p : parts) h = mix64(h ^ mix64(p + kGolden));
  return h;
}

uint64_t derive(uint64_t base, StreamTag tag, std::initializer_list<uint64_t> parts) {
  uint64_t h = mix64(base + kGolden);
  h = mix64(h ^ mix64(static_cast<uint64_t>(tag) + kGolden));
  for (uint64_t p : parts) h = mix64(h ^ mix64(p + kGolden));
  return h;
}

uint64_t RngStream::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

float RngStream::uniform() {
  return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f;
}

float RngStream::uniform(float lo, float hi) {
  return lo + uniform() * (hi - lo);
}

float RngStream::uniform_pos() {
  return 1.0f - uniform();
}

int RngStream::uniform_int(int n) {
  return static_cast<int>(next_u64() % static_cast<uint64_t>(n));
}

float RngStream::normal() {
  float u1 = uniform_pos();
  float u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(static_cast<double>(u1)));
  return static_cast<float>(r * std::cos(2.0 * 3.14159265358979323846 * static_cast<double>(u2)));
}

float RngStream::gamma(float alpha) {
  if (alpha < 1.0f) {
    // Gamma(a) = Gamma(a+1) * U^(1/a)
    float boost = std::pow(uniform_pos(), 1.0f / alpha);
    return gamma(alpha + 1.0f) * boost;
  }
  double d = static_cast<double>(alpha) - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = static_cast<double>(normal());
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = static_cast<double>(uniform_pos());
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
      return static_cast<float>(d * v);
    }
  }
}

float RngStream::beta(float a, float b) {
  float x = gamma(a);
  float y = gamma(b);
  return x / (x + y);
}

}  // namespace robustlab
