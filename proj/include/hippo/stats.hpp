#pragma once

#include <cstddef>
#include <vector>

namespace hippo {

/// Streaming mean and sample standard deviation (Welford).
class RunningStats {
 public:
  void add(double x);
  std::size_t count() const { return count_; }
  double mean() const { return mean_; }
  /// Sample variance with n - 1 in the denominator; 0 for fewer than two values.
  double variance() const;
  double sd() const;

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// P(F > f) for F ~ F(d1, d2).
double fisher_f_sf(double f, double d1, double d2);
/// P(F <= f) for F ~ F(d1, d2).
double fisher_f_cdf(double f, double d1, double d2);

double normal_cdf(double z);

/// Kolmogorov-Smirnov distance between the empirical CDF of `samples` and N(0, 1).
double ks_distance_normal(std::vector<double> samples);

/// Linear-interpolation quantile of sorted data, q in [0, 1].
double quantile_sorted(const std::vector<double>& sorted, double q);

}  // namespace hippo
