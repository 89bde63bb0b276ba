#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace pluvial {

/// Type-7 quantile (linear interpolation of order statistics) of ascending data.
double quantile_sorted(std::span<const double> sorted, double p);

/// Type-7 quantile of unsorted data.
double quantile(std::vector<double> values, double p);

/// Sorted distinct values.
std::vector<double> distinct_sorted(std::span<const double> values);

/// Neumaier-compensated sum.
double compensated_sum(std::span<const double> values);

double mean(std::span<const double> values);

/// Standard normal quantile.
double normal_quantile(double p);

/// std::mt19937_64 with integer and real draws defined here rather than by the
/// standard library's (implementation-specific) distributions, so seeded
/// shuffles and fold assignments are identical on every platform.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  /// Unbiased integer in [0, bound), by rejection.
  std::uint64_t below(std::uint64_t bound);
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

/// Fisher-Yates shuffle of 0..n-1 driven by SeededRng::below.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

}  // namespace pluvial
