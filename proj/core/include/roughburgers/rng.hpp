#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace rough {

// Counter-based Gaussian stream: every variate is a pure function of
// (seed, stream, a, b), independent of evaluation order.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1).
  double uniform(std::uint64_t stream, std::uint64_t a, std::uint64_t b,
                 std::uint64_t salt) const {
    std::uint64_t h = mix(seed_ ^ 0x6A09E667F3BCC909ULL);
    h = mix(h ^ stream);
    h = mix(h ^ a);
    h = mix(h ^ b);
    h = mix(h ^ salt);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller on two counter-indexed uniforms.
  double gaussian(std::uint64_t stream, std::uint64_t a, std::uint64_t b) const {
    const double u1 = 1.0 - uniform(stream, a, b, 0);  // (0,1]
    const double u2 = uniform(stream, a, b, 1);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t seed_;
};

}  // namespace rough
