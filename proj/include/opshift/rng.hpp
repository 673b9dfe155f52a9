#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace opshift {

/// Portable seedable generator (splitmix64). Every random draw in the suite
/// goes through this so that a config seed reproduces instances bit-for-bit
/// across platforms and implementations.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double next_in(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Standard normal via Box-Muller.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u = next_double();
    while (u <= 0.0) u = next_double();
    const double v = next_double();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double a = 2.0 * std::numbers::pi * v;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Stateless sub-seed derivation: independent streams per trial/component,
/// insensitive to execution order.
inline uint64_t derive_seed(uint64_t seed, uint64_t index) {
  SplitMix64 g(seed + 0x9E3779B97F4A7C15ull * (index + 1));
  return g.next_u64();
}

}  // namespace opshift
