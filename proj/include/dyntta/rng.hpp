#pragma once

#include <cstdint>
#include <random>

namespace dyntta {

// Deterministic random source. The engine is std::mt19937_64 (bit-exact per
// the standard); all distributions are implemented here rather than via
// <random> adapters, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // [0,1) with 24-bit resolution.
  float uniform() { return static_cast<float>(engine_() >> 40) * (1.0f / 16777216.0f); }

  float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

  // (0,1] with 53-bit resolution, for log() arguments.
  double uniform_pos() {
    return (static_cast<double>(engine_() >> 11) + 1.0) * (1.0 / 9007199254740992.0);
  }

  // [0, n)
  int uniform_int(int n) { return n <= 1 ? 0 : static_cast<int>(engine_() % static_cast<uint64_t>(n)); }

  float normal();
  float normal(float mean, float stddev) { return mean + stddev * normal(); }

  // Knuth's method; intended for small lambda (< ~100).
  int poisson(float lambda);

  // Deterministic sub-seed derivation (splitmix64 of a combined word).
  static uint64_t mix(uint64_t a, uint64_t b);

 private:
  std::mt19937_64 engine_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace dyntta
