#pragma once

#include <cstddef>
#include <vector>

#include "hippo/model.hpp"
#include "hippo/penalty.hpp"

namespace hippo {

struct SolverConfig {
  int max_inner_iters = 2000;
  /// Relative objective change that gates convergence of an inner solve.
  double inner_tol = 1e-7;
  int max_lla_iters = 10;
  /// Max-norm change between successive LLA iterates.
  double lla_tol = 1e-6;
  double backtrack_factor = 0.5;
  /// KKT residual tolerance, relative to max(1, |gradient at zero|_inf).
  double kkt_tol = 1e-7;

  void validate() const;
};

struct SolveResult {
  Vector coef;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double kkt_residual = 0.0;
};

/// min_beta (1/n) sum_i w_i (y_i - x_i'beta)^2 + 2 sum_j c_j |beta_j|
///
/// Solved by monotone FISTA with backtracking and adaptive restart, run on a
/// working set of columns that grows until the full KKT conditions hold. The
/// weighted design is formed once, so a single instance serves a whole
/// lambda path and every LLA reweighting.
class WeightedLeastSquares {
 public:
  WeightedLeastSquares(const Matrix& x, const Vector& y, const Vector& obs_weights);

  std::size_t n() const { return static_cast<std::size_t>(xs_.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(xs_.cols()); }

  /// Smooth part (1/n) sum_i w_i r_i^2.
  double loss(const Vector& beta) const;
  /// Gradient of the smooth part.
  Vector gradient(const Vector& beta) const;
  double objective(const Vector& coef_weights, const Vector& beta) const;
  double kkt_residual(const Vector& coef_weights, const Vector& beta) const;

  /// Smallest lambda for which zero is optimal on the penalized coordinates
  /// (the leading `n_unpenalized` coordinates are fitted freely first).
  double lambda_max(std::size_t n_unpenalized) const;

  SolveResult solve(const Vector& coef_weights, const SolverConfig& cfg, const Vector& init) const;

 private:
  Matrix xs_;  // diag(sqrt(w)) x
  Vector ys_;  // sqrt(w) y
  double grad_scale_;
};

/// min_theta (1/n) sum_i [x_i'theta + e_i exp(-x_i'theta)] + 4 sum_j c_j |theta_j|
/// where e_i are squared residuals.
///
/// Cyclic coordinate descent: each coordinate takes a proximal Newton step
/// (soft-threshold against 4 c_j / curvature) with step halving until the
/// coordinate objective does not increase. After two full cycles only the
/// active set is swept; a full sweep verifies convergence.
class VarianceProblem {
 public:
  /// Throws DegenerateResiduals when every squared residual is zero.
  VarianceProblem(const Matrix& x, const Vector& sq_residuals);

  std::size_t n() const { return static_cast<std::size_t>(x_.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(x_.cols()); }

  double loss(const Vector& theta) const;
  Vector gradient(const Vector& theta) const;
  double objective(const Vector& coef_weights, const Vector& theta) const;
  double kkt_residual(const Vector& coef_weights, const Vector& theta) const;

  /// Minimizer over the leading unpenalized coordinates with the rest at zero.
  /// Only closed form for a single intercept column; otherwise solved by CD.
  Vector unpenalized_start(std::size_t n_unpenalized, const SolverConfig& cfg) const;
  double lambda_max(std::size_t n_unpenalized, const SolverConfig& cfg) const;

  SolveResult solve(const Vector& coef_weights, const SolverConfig& cfg, const Vector& init) const;

 private:
  Matrix x_;
  Vector sq_res_;
  double grad_scale_;
};

struct WeightedL1Problem {
  const Matrix& x;
  const Vector& y;
  Vector obs_weights;
  Vector coef_weights;
};

SolveResult solve_weighted_l1_ls(const WeightedL1Problem& prob, const SolverConfig& cfg,
                                 const Vector& init);

SolveResult solve_variance_l1(const Matrix& x, const Vector& sq_residuals,
                              const Vector& coef_weights, const SolverConfig& cfg,
                              const Vector& init);

struct LlaResult {
  Vector coef;
  /// The k = 0 iterate: solution of the pure l1 problem.
  Vector l1_coef;
  /// Penalized objective (with the true penalty, not its linearization) at each iterate.
  std::vector<double> objective_trace;
  /// Reweighting steps after the l1 start; 0 for L1.
  int lla_iterations = 0;
  int inner_iterations = 0;
  bool converged = true;
  bool inner_converged = true;

  /// Number of increases in objective_trace beyond `slack` (relative).
  int monotonicity_violations(double slack = 1e-9) const;
};

/// Local linear approximation driver. The first iterate solves the l1 problem
/// (weights lambda); each following iterate reweights by rho'(|previous|) and
/// re-solves warm-started from the previous iterate. For L1 exactly one inner
/// solve is performed. The leading `n_unpenalized` coordinates carry weight 0.
LlaResult lla_solve(const WeightedLeastSquares& mean_problem, const PenaltySpec& spec,
                    std::size_t n_unpenalized, const SolverConfig& cfg, const Vector& init);

LlaResult lla_solve(const VarianceProblem& variance_problem, const PenaltySpec& spec,
                    std::size_t n_unpenalized, const SolverConfig& cfg, const Vector& init);

/// Stage objectives with the actual penalty: (1/n)-normalized losses plus
/// 2 sum rho (mean) or 4 sum rho (variance).
double mean_penalized_objective(const WeightedLeastSquares& prob, const PenaltySpec& spec,
                                std::size_t n_unpenalized, const Vector& beta);
double variance_penalized_objective(const VarianceProblem& prob, const PenaltySpec& spec,
                                    std::size_t n_unpenalized, const Vector& theta);

}  // namespace hippo
