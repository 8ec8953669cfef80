#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hippo/model.hpp"
#include "hippo/pipeline.hpp"

namespace hippo {

/// (1/n) sum (y - y^)^2.
double mean_squared_error(const Dataset& d, const ModelParams& p);

/// Average held-out negative log-likelihood (1/n) sum l(y_i, x_i; beta, theta).
double partial_prediction_score(const Dataset& d, const ModelParams& p);

/// Seeded shuffle of 0..n-1 cut into k contiguous blocks.
std::vector<std::vector<std::size_t>> kfold_assignment(std::size_t n, std::size_t k, std::uint64_t seed);

struct CvMetrics {
  double mse = 0.0;
  double partial_prediction_score = 0.0;
  /// Mean selected mean/variance coefficients per fold, intercepts excluded.
  double mean_support_beta = 0.0;
  double mean_support_theta = 0.0;
  int folds_used = 0;
  std::vector<int> skipped_folds;
  std::vector<std::string> skip_reasons;
  int fallback_folds = 0;
};

/// k-fold cross validation of fit_hippo (penalty from `cfg`). Folds run on up
/// to `jobs` threads; the result does not depend on `jobs`.
CvMetrics kfold_cv(const Dataset& d, std::size_t k, const GridSpec& grid, const PipelineConfig& cfg,
                   std::uint64_t seed, int jobs = 1);

struct BinSummary {
  double lower = 0.0;
  double upper = 0.0;
  int count = 0;
  double mean = 0.0;
  double variance = 0.0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

struct FTestResult {
  std::size_t bin_a = 0;
  std::size_t bin_b = 0;
  /// Larger over smaller sample variance.
  double f = 1.0;
  double df_num = 0.0;
  double df_den = 0.0;
  /// Two-sided: min(1, 2 P(F > f)).
  double p_value = 1.0;
};

struct DiagnosticsReport {
  Vector studentized;
  std::vector<BinSummary> bins;
  std::vector<FTestResult> tests;
  std::vector<std::string> warnings;
};

/// Bins studentized residuals by fitted value with the half-open intervals
/// [bins[k], bins[k+1]) and runs pairwise F-tests of equal variance. Residuals
/// are divided by `scale` elementwise, or by their root mean square when
/// `scale` is empty. Bins with fewer than two points are dropped with a warning.
DiagnosticsReport heteroscedasticity_diagnostics(const Vector& fitted, const Vector& resid, const Vector& scale,
                                                 const std::vector<double>& bins);

struct OracleCheckSpec {
  /// Mean support size; the support columns come first.
  std::size_t s = 2;
  /// Extra columns that enter only the variance model.
  std::size_t extra = 2;
  double beta_value = 1.0;
  /// Coefficient on each variance column (last support column plus extras);
  /// zero gives the homoscedastic case.
  double theta_value = 0.5;
  /// Check the reweighted (true-variance GLS) estimator instead of OLS.
  bool weighted = false;
  std::uint64_t seed = 2024;
};

/// Monte Carlo check of asymptotic normality on the true support: over `reps`
/// replicates with a fixed design, refit beta on S with lambda = 0 and return
/// the KS distance of sqrt(n) a'(beta^_S - beta_S) / zeta to N(0, 1), where
/// a = 1/sqrt(s) and zeta is the plug-in sandwich standard deviation.
double oracle_normality_check(int reps, std::size_t n, const OracleCheckSpec& spec);

}  // namespace hippo
