#pragma once

#include <cstdint>
#include <initializer_list>

namespace robustlab {

// Stream purposes. Every consumer of randomness owns a stream derived from
// (run seed, tag, indices...), so adding or removing one consumer never
// shifts the draws seen by another.
enum class StreamTag : uint64_t {
  model_init = 1,
  holdout_split = 2,
  shuffle = 3,
  train_attack = 4,
  augment = 5,
  eval_attack = 6,
  semisup = 7,
  eval_subsample = 8,
  synthetic = 9,
};

uint64_t mix64(uint64_t z);

// Deterministic stream-seed derivation: seeds differing in any component
// produce unrelated streams.
uint64_t derive(uint64_t base, std::initializer_list<uint64_t> parts);
uint64_t derive(uint64_t base, StreamTag tag, std::initializer_list<uint64_t> parts = {});

// Small counter-based generator (splitmix64). Self-contained so that draws
// and derived distributions are bit-identical across standard libraries.
class RngStream {
 public:
  explicit RngStream(uint64_t seed) : state_(seed) {}

  uint64_t next_u64();
  uint32_t next_u32() { return static_cast<uint32_t>(next_u64() >> 32); }

  // uniform in [0, 1) with 24 bits of mantissa
  float uniform();
  float uniform(float lo, float hi);
  // uniform in (0, 1]; safe under log()
  float uniform_pos();
  // integer in [0, n), n >= 1
  int uniform_int(int n);
  // standard normal via Box-Muller (no state carried between calls)
  float normal();
  // Marsaglia-Tsang, with the alpha < 1 boost
  float gamma(float alpha);
  float beta(float a, float b);

 private:
  uint64_t state_;
};

}  // namespace robustlab
