#pragma once

// Seeded randomness for the certification suites. The engine is
// std::mt19937_64, whose output sequence is fixed by the standard; the
// helpers below avoid std::*_distribution (implementation-defined) so a seed
// yields the same draws with every standard library.

#include <cstdint>
#include <cmath>
#include <random>

namespace bitree {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Derives an independent stream, e.g. one per trial of a sweep.
  [[nodiscard]] static Rng for_trial(std::uint64_t seed, std::uint64_t trial) {
    return Rng(mix(seed ^ mix(trial + 0x9e3779b97f4a7c15ULL)));
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound), bound > 0. Rejection sampling.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % bound;
  }

  /// Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool coin(double p_true) { return unit() < p_true; }

  /// Dyadic rational k * 2^-bits with k uniform in [1, max_numerator].
  double dyadic(std::int64_t max_numerator, int bits) {
    return std::ldexp(static_cast<double>(between(1, max_numerator)), -bits);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace bitree
