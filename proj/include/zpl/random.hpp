#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace zpl {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic random source. mt19937_64 output is fully specified by the
/// standard, and all variate transforms are implemented here rather than via
/// std distributions, so a given seed yields the same stream on every
/// platform and compiler.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Derive an independent child seed, e.g. per scan row or per chunk.
  static std::uint64_t derive(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master ^ splitmix64(index + 0x51ed2701ULL));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Exponential with the given mean (inverse CDF).
  double exponential(double mean) { return -mean * std::log1p(-uniform()); }

  /// Gaussian, mean 0, given sigma (Box-Muller, cached second deviate).
  double normal(double sigma = 1.0) {
    if (has_cached_) {
      has_cached_ = false;
      return cached_ * sigma;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    cached_ = r * std::sin(2.0 * 3.14159265358979323846 * u2);
    has_cached_ = true;
    return r * std::cos(2.0 * 3.14159265358979323846 * u2) * sigma;
  }

  /// Poisson count by summing exponential gaps; exact for any mean, O(mean).
  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::uint64_t n = 0;
    double acc = exponential(1.0);
    while (acc < mean) {
      ++n;
      acc += exponential(1.0);
    }
    return n;
  }

  /// Geometric number of Bernoulli(p) trials up to and including the first
  /// success; support {1, 2, ...}.
  std::uint64_t geometric(double p) {
    if (p >= 1.0) return 1;
    const double u = uniform();
    return 1 + static_cast<std::uint64_t>(std::floor(std::log1p(-u) / std::log1p(-p)));
  }

  /// Gamma(shape, scale) via Marsaglia-Tsang squeeze; shape >= 1 required
  /// (the only case used here: sums of iid exponentials).
  double gamma(double shape, double scale) {
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
  }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace zpl
