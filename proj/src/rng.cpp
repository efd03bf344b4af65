#include "dyntta/rng.hpp"

#include <cmath>

namespace dyntta {

float Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return static_cast<float>(cached_);
  }
  double u1 = uniform_pos();
  double u2 = uniform_pos();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 6.283185307179586 * u2;
  cached_ = r * std::sin(a);
  has_cached_ = true;
  return static_cast<float>(r * std::cos(a));
}

int Rng::poisson(float lambda) {
  if (lambda <= 0.0f) return 0;
  double limit = std::exp(-static_cast<double>(lambda));
  int k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= uniform_pos();
  } while (p > limit);
  return k - 1;
}

uint64_t Rng::mix(uint64_t a, uint64_t b) {
  uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 0x632BE59BD9B4E019ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace dyntta
