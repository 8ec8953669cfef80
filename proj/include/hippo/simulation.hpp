#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hippo/model.hpp"
#include "hippo/pipeline.hpp"
#include "hippo/random.hpp"

namespace hippo {

enum class Example { Ex1, Ex2, Custom };

enum class CovarianceKind {
  /// First three columns equicorrelated with rho, the rest iid N(0, 1).
  EquicorrelatedFirst3,
  /// cov(X_i, X_j) = 0.5^|i - j|.
  AR1,
  Independent,
};

/// Generating parameters in the model's parameterization sigma = exp(x'theta / 2),
/// intercepts (when present) at index 0.
struct TrueModel {
  Vector beta_star;
  Vector theta_star;
  CovarianceKind covariance = CovarianceKind::Independent;
  double rho = 0.0;
};

struct GeneratedData {
  Dataset data;
  TrueModel truth;
};

/// y = exp((x1 + x2 + x3) / 2) * eps; beta* = 0, theta* = e1 + e2 + e3. No intercepts.
GeneratedData generate_example1(std::size_t n, std::size_t p, double rho, std::uint64_t seed);

/// y = 2 + x'beta + exp((1 + x'theta) / 2) * eps with AR(1) covariates (default p = 600),
/// beta_[12] = (3,3,3,1.5,1.5,1.5,0,0,0,2,2,2) and
/// theta_[15] = (1,1,1,0,0,0,.5,.5,.5,0,0,0,.75,.75,.75), so theta* = (1, theta) and
/// beta* = (2, beta) in the model's parameterization.
GeneratedData generate_example2(std::size_t n, std::uint64_t seed, std::size_t p = 600);

/// Synthetic heteroscedastic regression used as a stand-in for real panels:
/// AR(1) covariates, both intercepts, mean effects on columns 0, 3, 7, 14, 22 and
/// variance effects on columns 2, 5, 9, 28 (those beyond p are dropped).
GeneratedData generate_heteroscedastic_standin(std::size_t n, std::size_t p, std::uint64_t seed);

/// AR(1) rows: X_1 = Z_1, X_j = 0.5 X_{j-1} + sqrt(0.75) Z_j.
Matrix ar1_design(std::size_t n, std::size_t p, double phi, Rng& rng);

struct SupportMetrics {
  double precision = 1.0;
  double recall = 1.0;
};

/// Precision |S^ n S| / |S^| and recall |S^ n S| / |S| over indices >= offset.
/// Empty S^ gives precision 1 if S is empty else 0; empty S gives recall 1.
SupportMetrics support_metrics(const Vector& estimated, const Vector& truth, std::size_t offset = 0);

struct Estimator {
  PenaltyFamily method = PenaltyFamily::SCAD;
  Criterion criterion = Criterion::BIC;

  /// "HIPPO-BIC", "HHR-AIC", ...
  std::string name() const;
};

/// HHR-AIC, HIPPO-AIC, HHR-BIC, HIPPO-BIC.
std::vector<Estimator> default_estimators();

struct SimulationSpec {
  Example example = Example::Ex1;
  std::size_t n = 200;
  std::size_t p = 2000;
  double rho = 0.0;
  int reps = 100;
  std::uint64_t master_seed = 42;
  std::vector<Estimator> estimators = default_estimators();
  /// Worker threads; results do not depend on it.
  int jobs = 1;

  void validate() const;
};

struct ReplicateRecord {
  int replicate = 0;
  std::string estimator;
  /// 1 or 2: the sweep the parameters come from.
  int iteration = 1;
  double beta_error = 0.0;
  double theta_error = 0.0;
  double precision_beta = 1.0;
  double recall_beta = 1.0;
  double precision_theta = 1.0;
  double recall_theta = 1.0;
  int support_beta = 0;
  int support_theta = 0;
  int mm_violations = 0;
  bool converged = true;
  bool fallback = false;
};

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;
};

struct CellSummary {
  std::string estimator;
  int iteration = 1;
  int count = 0;
  MetricSummary beta_error, precision_beta, recall_beta;
  MetricSummary theta_error, precision_theta, recall_theta;
};

struct ReplicateFailure {
  int replicate = 0;
  std::string estimator;
  std::string message;
};

struct SimulationReport {
  SimulationSpec spec;
  std::vector<ReplicateRecord> records;
  std::vector<CellSummary> cells;
  std::vector<ReplicateFailure> failures;
  int mm_violations = 0;
};

/// Aggregates records into cells ordered by estimator (in `estimators` order),
/// then iteration.
std::vector<CellSummary> aggregate(const std::vector<ReplicateRecord>& records,
                                   const std::vector<Estimator>& estimators);

/// Example 1 fits the variance stage only with beta known to be zero; Example 2
/// runs the full pipeline and records sweeps 1 and 2. Replicate r draws its data
/// from substream_seed(master_seed, r).
SimulationReport run_monte_carlo(const SimulationSpec& spec, const PipelineConfig& cfg,
                                 const GridSpec& grid = {});

}  // namespace hippo
