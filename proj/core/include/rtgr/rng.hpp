#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace rtgr {

/// Deterministic 64-bit generator (splitmix64). All randomness in the
/// project flows through this type so that runs are reproducible
/// independently of the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  bool coin() { return (next_u64() & 1u) != 0; }

  /// Standard normal via Box-Muller (the sine half is discarded).
  double normal() {
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Deterministically derives an independent stream from (root, tag, index).
  static std::uint64_t derive(std::uint64_t root, std::uint64_t tag, std::uint64_t index = 0) {
    Rng mix(root ^ (tag * 0x9e3779b97f4a7c15ull));
    mix.next_u64();
    mix.state_ ^= index * 0xd1b54a32d192ed03ull;
    return mix.next_u64();
  }

 private:
  std::uint64_t state_;
};

}  // namespace rtgr
