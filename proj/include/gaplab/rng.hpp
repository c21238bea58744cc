#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace gaplab {

/// SplitMix64 finalizer; used to derive independent seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of the stream for work unit `index` under `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Seeded 64-bit generator with bit-reproducible uniform, Gaussian and
/// exponential draws. std::mt19937_64 output is fixed by the standard; the
/// transforms below are written out so no library distribution (whose
/// algorithm is implementation-defined) is involved.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

  std::uint64_t seed() const { return seed_; }

  /// Independent generator for a child task.
  Rng child(std::uint64_t index) const { return Rng(derive_seed(seed_, index)); }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n; }

  /// Standard normal via the Marsaglia polar method.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  /// Centered complex Gaussian with E|Z|^2 = variance, split evenly between
  /// real and imaginary parts.
  std::complex<double> complex_gaussian(double variance) {
    const double sd = std::sqrt(0.5 * variance);
    const double re = gaussian();
    const double im = gaussian();
    return {sd * re, sd * im};
  }

  /// Exponential with unit mean.
  double exponential() { return -std::log(uniform_open0()); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gaplab
