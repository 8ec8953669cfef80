#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hippo/model.hpp"
#include "hippo/penalty.hpp"
#include "hippo/solvers.hpp"

namespace hippo {

enum class Criterion { AIC, BIC };

std::string to_string(Criterion c);
Criterion parse_criterion(const std::string& s);

/// How stage 3 turns sigma-hat into observation weights: 1/sigma or 1/sigma^2
/// (classical GLS).
enum class GlsWeights { InverseSd, InverseVariance };

std::string to_string(GlsWeights g);
GlsWeights parse_gls_weights(const std::string& s);

/// Candidate lambdas. An empty grid is built per stage from that stage's
/// lambda_max: `n_points` log-spaced values down to `min_ratio * lambda_max`.
/// The automatic variance grid never goes below `variance_floor` times
/// sqrt(log p / n) / 2 (times the RMS of the penalized columns), the level of
/// the largest pure-noise coordinate of the variance score; 0 disables this.
/// Every path stops before the first point that selects more than
/// `max_support` penalized coefficients (0: floor(n / log n); negative: no cap).
struct GridSpec {
  std::vector<double> lambda_s_grid;
  std::vector<double> lambda_t_grid;
  Criterion criterion = Criterion::BIC;
  int n_points = 30;
  double min_ratio = 1e-4;
  double variance_floor = 1.0;
  int max_support = 0;
  /// Tune (lambda_S, lambda_T) jointly over the product grid in each sweep
  /// instead of stagewise.
  bool full_product = false;

  void validate() const;
};

std::vector<double> log_spaced_grid(double lambda_max, int n_points, double min_ratio);

/// Effective cap on penalized support size for a sample of size n.
std::size_t support_cap(const GridSpec& grid, std::size_t n);

/// sqrt(log p / n) / 2 times the RMS of the penalized variance columns.
double variance_noise_level(const Dataset& d);

struct PipelineConfig {
  PenaltyFamily penalty_family = PenaltyFamily::SCAD;
  double scad_a = 3.7;
  /// Stage 1 runs once; each sweep then runs stage 2 followed by stage 3.
  int n_sweeps = 2;
  GlsWeights gls_weights = GlsWeights::InverseVariance;
  SolverConfig solver;

  void validate() const;
};

/// One fitted grid point of a tuned stage.
struct PathPoint {
  double lambda = 0.0;
  Vector coef;
  LlaResult fit;
  /// Summed negative log-likelihood used by the criterion.
  double nll = 0.0;
  /// Degrees of freedom of the full model this point implies.
  int df = 0;

  double criterion(Criterion c, std::size_t n) const;
};

struct StagePath {
  std::vector<PathPoint> points;
  int mm_violations = 0;
};

/// Index of the criterion-minimizing point; ties go to smaller df, then to
/// the earlier (larger) lambda.
std::size_t select_point(const StagePath& path, Criterion c, std::size_t n);

/// Mean stage along a lambda path with observation weights w. The criterion
/// is evaluated at (beta, theta), with theta = 0 when none is given (stage 1).
StagePath tune_mean_stage(const Dataset& d, const Vector& obs_weights,
                          const std::optional<Vector>& theta, std::vector<double> lambdas,
                          const GridSpec& grid, const PipelineConfig& cfg);

/// Variance stage along a lambda path for fixed beta. Throws DegenerateResiduals.
StagePath tune_variance_stage(const Dataset& d, const Vector& beta, std::vector<double> lambdas,
                              const GridSpec& grid, const PipelineConfig& cfg);

/// Stage 1: penalized least squares for beta with unit weights.
LlaResult fit_stage1(const Dataset& d, const PenaltySpec& spec, const SolverConfig& cfg);
/// Stage 2: penalized variance pseudolikelihood on the residuals of `beta`.
LlaResult fit_stage2(const Dataset& d, const Vector& beta, const PenaltySpec& spec,
                     const SolverConfig& cfg);
/// Stage 3: reweighted penalized least squares with weights from `theta`.
LlaResult fit_stage3(const Dataset& d, const Vector& theta, const PenaltySpec& spec,
                     const SolverConfig& cfg, GlsWeights gls = GlsWeights::InverseVariance);

Vector stage3_weights(const Dataset& d, const Vector& theta, GlsWeights gls);

/// True when residuals carry no variance information (rms below 1e-10 of the
/// response scale).
bool degenerate_residuals(const Vector& resid, const Vector& y);

/// Intercept-only variance MLE log(mean r^2), clipped to the linear
/// predictor range; zero vector when the dataset has no variance intercept.
Vector intercept_only_theta(const Dataset& d, const Vector& resid);

struct StageRecord {
  std::string stage;  // "stage1", "stage2", "stage3"
  int sweep = 0;
  double lambda = 0.0;
  double criterion_value = 0.0;
  int df = 0;
  int grid_size = 0;
  int lla_iterations = 0;
  int inner_iterations = 0;
  bool converged = true;
  std::vector<double> objective_trace;
};

struct SweepRecord {
  ModelParams params;
  double lambda_s = 0.0;
  double lambda_t = 0.0;
  double criterion_value = 0.0;
  int df = 0;
};

struct FitResult {
  ModelParams params;
  PenaltyFamily penalty_family = PenaltyFamily::SCAD;
  Criterion criterion = Criterion::BIC;
  double lambda_s = 0.0;
  double lambda_t = 0.0;
  /// Objective trace of the last selected stage fit.
  std::vector<double> objective_trace;
  std::vector<StageRecord> stages;
  std::vector<SweepRecord> sweeps;
  double criterion_value = 0.0;
  int df = 0;
  bool homoscedastic_fallback = false;
  /// All selected inner solves met their tolerances.
  bool converged = true;
  /// MM monotonicity violations over every LLA run on every grid point.
  int mm_violations = 0;
};

/// neg_log_likelihood + 2 df (AIC) or + df log n (BIC).
double information_criterion(const Dataset& d, const ModelParams& p, Criterion kind);

FitResult fit_hippo(const Dataset& d, const GridSpec& grid, const PipelineConfig& cfg);

/// fit_hippo with the l1 penalty in every stage.
FitResult fit_hhr(const Dataset& d, const GridSpec& grid, PipelineConfig cfg);

}  // namespace hippo
