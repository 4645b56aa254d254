#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace evcrowd {

/// Stateless generator: every draw is a hash of (seed, stream, index), so
/// results never depend on call order or thread partitioning.
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  constexpr std::uint64_t bits(std::uint64_t index) const {
    return mix(mix(mix(seed_) ^ stream_) ^ index);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform(std::uint64_t index) const {
    return static_cast<double>(bits(index) >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller on draws 2*index and 2*index + 1.
  double normal(std::uint64_t index) const {
    double u1 = 1.0 - uniform(2 * index);  // (0, 1]
    double u2 = uniform(2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

}  // namespace evcrowd
