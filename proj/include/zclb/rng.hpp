#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace zclb {

// Seedable PRNG (splitmix64 core) with Gaussian draws via Box-Muller.
// Streams constructed from (seed, stream) are decoupled from scheduling, so
// multi-path Monte Carlo results do not depend on execution order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  Rng(std::uint64_t seed, std::uint64_t stream)
      : state_(mix(mix(seed + kGamma) + stream + 1)) {}

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix(state_);
  }

  // Uniform on (0, 1]; never 0, so log() is safe in normal().
  double uniform01() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + uniform01() * (b - a); }

  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace zclb
