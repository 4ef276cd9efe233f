#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace basisgen {

/// Deterministic random stream. The engine (mt19937_64) is bit-exact by
/// standard definition; variate mapping is done here rather than through
/// std distributions, whose algorithms are implementation-defined. Two
/// builds with the same seed therefore emit the same doubles.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random mantissa bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller, one cached spare per pair.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Integer in [0, n). n is tiny compared to 2^64, so plain modulo is fine.
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  /// Independent child stream keyed by (this stream's seed, key).
  Rng derive(std::uint64_t key) const { return Rng(mix(seed_, key)); }

  std::uint64_t seed() const { return seed_; }

  /// splitmix64 finalizer over the combined words.
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace basisgen
