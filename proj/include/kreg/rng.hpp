#pragma once

#include <cmath>
#include <cstdint>

namespace kreg {

/// splitmix64 stream. Used wherever reproducibility across platforms matters
/// (benchmark data, trial seeds); the standard-library distributions are
/// implementation-defined, this is not.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller.
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  /// Independent child stream; derivation is pure arithmetic on the seed so
  /// per-item streams can be spawned in parallel loops.
  static uint64_t derive(uint64_t seed, uint64_t index) {
    SplitMix64 s(seed ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
    return s.next();
  }

 private:
  uint64_t state_;
};

}  // namespace kreg
