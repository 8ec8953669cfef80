#include "hippo/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hippo {

void SolverConfig::validate() const {
  if (max_inner_iters < 1 || max_lla_iters < 1) throw Error("solver: iteration limits must be positive");
  if (!(inner_tol > 0.0) || !(lla_tol > 0.0) || !(kkt_tol > 0.0)) {
    throw Error("solver: tolerances must be positive");
  }
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
    throw Error("solver: backtrack_factor must lie in (0, 1)");
  }
}

namespace {

constexpr double kTiny = 1e-300;

// Largest eigenvalue of a'a.
double power_iteration(const Matrix& a, int iters) {
  if (a.cols() == 0) return 0.0;
  Vector v = Vector::Constant(a.cols(), 1.0 / std::sqrt(static_cast<double>(a.cols())));
  double lam = 0.0;
  for (int k = 0; k < iters; ++k) {
    const Vector w = a.transpose() * (a * v);
    const double nw = w.norm();
    if (!(nw > 0.0)) return 0.0;
    lam = nw;
    v = w / nw;
  }
  return lam;
}

// sum_j c_j |v_j| skipping zeros, so infinite weights on zero coordinates are harmless.
double weighted_l1(const Vector& c, const Vector& v) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (v(j) != 0.0) s += c(j) * std::abs(v(j));
  }
  return s;
}

// KKT residual of min f + mult * sum c_j |v_j| given the gradient g of f.
double kkt_from_gradient(const Vector& g, const Vector& c, const Vector& v, double mult) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    double r;
    if (v(j) != 0.0) {
      r = std::abs(g(j) + mult * c(j) * (v(j) > 0.0 ? 1.0 : -1.0));
    } else {
      r = std::max(std::abs(g(j)) - mult * c(j), 0.0);
    }
    worst = std::max(worst, r);
  }
  return worst;
}

bool small_change(double before, double after, double tol) {
  return std::abs(before - after) <= tol * std::max(std::abs(after), kTiny);
}

struct SubResult {
  int iterations = 0;
  bool converged = false;
};

// Monotone FISTA on the columns in `a`; `b` is updated in place.
SubResult mfista(const Matrix& a, const Vector& ys, const Vector& c, Vector& b,
                 const SolverConfig& cfg, double kkt_abs, int max_iters) {
  const double n = static_cast<double>(a.rows());
  auto penalty = [&](const Vector& v) { return 2.0 * weighted_l1(c, v); };

  double lip = 2.0 / n * power_iteration(a, 50);
  if (!(lip > 0.0)) lip = 1.0;

  Vector r_b = ys - a * b;
  double obj_b = r_b.squaredNorm() / n + penalty(b);
  Vector b_prev = b;
  Vector r_prev = r_b;
  Vector z = b;
  Vector r_z = r_b;
  double t = 1.0;

  SubResult out;
  Vector cand(b.size());
  Vector r_c(ys.size());
  for (int it = 0; it < max_iters; ++it) {
    out.iterations = it + 1;
    const Vector grad = -(2.0 / n) * (a.transpose() * r_z);
    const double f_z = r_z.squaredNorm() / n;
    double f_c = 0.0;
    for (int bt = 0; bt < 200; ++bt) {
      for (Eigen::Index j = 0; j < b.size(); ++j) {
        cand(j) = soft_threshold(z(j) - grad(j) / lip, 2.0 * c(j) / lip);
      }
      r_c = ys - a * cand;
      f_c = r_c.squaredNorm() / n;
      const Vector d = cand - z;
      if (f_c <= f_z + grad.dot(d) + 0.5 * lip * d.squaredNorm() + 1e-12 * std::abs(f_z)) break;
      lip /= cfg.backtrack_factor;
    }
    const double obj_c = f_c + penalty(cand);
    const double obj_before = obj_b;
    if (obj_c <= obj_b) {
      const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
      b_prev = b;
      r_prev = r_b;
      b = cand;
      r_b = r_c;
      obj_b = obj_c;
      const double mom = (t - 1.0) / t_next;
      z = b + mom * (b - b_prev);
      r_z = r_b + mom * (r_b - r_prev);
      t = t_next;
    } else {
      // Restart momentum from the incumbent.
      z = b;
      r_z = r_b;
      t = 1.0;
    }
    if (small_change(obj_before, obj_b, cfg.inner_tol) || it % 50 == 49) {
      const Vector g = -(2.0 / n) * (a.transpose() * r_b);
      if (kkt_from_gradient(g, c, b, 2.0) <= kkt_abs) {
        out.converged = true;
        break;
      }
    }
  }
  return out;
}

void check_weights(const Vector& c, Eigen::Index p, const char* who) {
  if (c.size() != p) throw DimensionError(std::string(who) + ": coefficient weights have wrong length");
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!(c(j) >= 0.0)) throw Error(std::string(who) + ": coefficient weights must be >= 0");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Weighted least squares with weighted l1 penalty

WeightedLeastSquares::WeightedLeastSquares(const Matrix& x, const Vector& y, const Vector& obs_weights) {
  if (x.rows() != y.size() || obs_weights.size() != y.size()) {
    throw DimensionError("weighted least squares: dimension mismatch");
  }
  for (Eigen::Index i = 0; i < obs_weights.size(); ++i) {
    if (!(obs_weights(i) >= 0.0) || !std::isfinite(obs_weights(i))) {
      throw Error("weighted least squares: observation weights must be finite and >= 0");
    }
  }
  const Vector sw = obs_weights.cwiseSqrt();
  xs_ = sw.asDiagonal() * x;
  ys_ = sw.cwiseProduct(y);
  grad_scale_ = std::max(1.0, gradient(Vector::Zero(x.cols())).cwiseAbs().maxCoeff());
}

double WeightedLeastSquares::loss(const Vector& beta) const {
  return (ys_ - xs_ * beta).squaredNorm() / static_cast<double>(n());
}

Vector WeightedLeastSquares::gradient(const Vector& beta) const {
  return -(2.0 / static_cast<double>(n())) * (xs_.transpose() * (ys_ - xs_ * beta));
}

double WeightedLeastSquares::objective(const Vector& coef_weights, const Vector& beta) const {
  return loss(beta) + 2.0 * weighted_l1(coef_weights, beta);
}

double WeightedLeastSquares::kkt_residual(const Vector& coef_weights, const Vector& beta) const {
  return kkt_from_gradient(gradient(beta), coef_weights, beta, 2.0);
}

double WeightedLeastSquares::lambda_max(std::size_t n_unpenalized) const {
  const auto k = static_cast<Eigen::Index>(n_unpenalized);
  Vector r = ys_;
  if (k > 0) {
    const Matrix lead = xs_.leftCols(k);
    const Vector b = lead.colPivHouseholderQr().solve(ys_);
    r -= lead * b;
  }
  if (xs_.cols() == k) return 0.0;
  return (xs_.rightCols(xs_.cols() - k).transpose() * r).cwiseAbs().maxCoeff() /
         static_cast<double>(n());
}

SolveResult WeightedLeastSquares::solve(const Vector& coef_weights, const SolverConfig& cfg,
                                        const Vector& init) const {
  const Eigen::Index p = xs_.cols();
  check_weights(coef_weights, p, "solve_weighted_l1_ls");
  if (init.size() != p) throw DimensionError("solve_weighted_l1_ls: init has wrong length");

  const double kkt_abs = cfg.kkt_tol * grad_scale_;
  Vector beta = init;
  std::vector<char> in_set(static_cast<std::size_t>(p), 0);
  Vector g = gradient(beta);
  for (Eigen::Index j = 0; j < p; ++j) {
    if (beta(j) != 0.0 || coef_weights(j) == 0.0 || std::abs(g(j)) > 2.0 * coef_weights(j)) {
      in_set[static_cast<std::size_t>(j)] = 1;
    }
  }

  SolveResult res;
  int used = 0;
  bool converged = false;
  while (true) {
    std::vector<Eigen::Index> work;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (in_set[static_cast<std::size_t>(j)]) work.push_back(j);
    }
    if (!work.empty()) {
      const auto m = static_cast<Eigen::Index>(work.size());
      Matrix a(xs_.rows(), m);
      Vector bw(m);
      Vector cw(m);
      for (Eigen::Index k = 0; k < m; ++k) {
        a.col(k) = xs_.col(work[static_cast<std::size_t>(k)]);
        bw(k) = beta(work[static_cast<std::size_t>(k)]);
        cw(k) = coef_weights(work[static_cast<std::size_t>(k)]);
      }
      const SubResult sub = mfista(a, ys_, cw, bw, cfg, kkt_abs, cfg.max_inner_iters - used);
      used += sub.iterations;
      converged = sub.converged;
      for (Eigen::Index k = 0; k < m; ++k) beta(work[static_cast<std::size_t>(k)]) = bw(k);
    } else {
      converged = true;
    }
    g = gradient(beta);
    bool added = false;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!in_set[static_cast<std::size_t>(j)] && std::abs(g(j)) > 2.0 * coef_weights(j) + kkt_abs) {
        in_set[static_cast<std::size_t>(j)] = 1;
        added = true;
      }
    }
    if (!added) break;
    if (used >= cfg.max_inner_iters) {
      converged = false;
      break;
    }
  }
  res.coef = std::move(beta);
  res.objective = objective(coef_weights, res.coef);
  res.iterations = used;
  res.kkt_residual = kkt_from_gradient(gradient(res.coef), coef_weights, res.coef, 2.0);
  res.converged = converged;
  return res;
}

SolveResult solve_weighted_l1_ls(const WeightedL1Problem& prob, const SolverConfig& cfg,
                                 const Vector& init) {
  return WeightedLeastSquares(prob.x, prob.y, prob.obs_weights).solve(prob.coef_weights, cfg, init);
}

// ---------------------------------------------------------------------------
// Variance pseudolikelihood with weighted l1 penalty

VarianceProblem::VarianceProblem(const Matrix& x, const Vector& sq_residuals)
    : x_(x), sq_res_(sq_residuals) {
  if (x.rows() != sq_residuals.size()) throw DimensionError("variance problem: dimension mismatch");
  for (Eigen::Index i = 0; i < sq_res_.size(); ++i) {
    if (!(sq_res_(i) >= 0.0) || !std::isfinite(sq_res_(i))) {
      throw Error("variance problem: squared residuals must be finite and >= 0");
    }
  }
  if (!(sq_res_.maxCoeff() > 0.0)) throw DegenerateResiduals();
  grad_scale_ = std::max(1.0, gradient(Vector::Zero(x.cols())).cwiseAbs().maxCoeff());
}

double VarianceProblem::loss(const Vector& theta) const {
  const Vector u = x_ * theta;
  return (u.array() + sq_res_.array() * (-u.array()).exp()).sum() / static_cast<double>(n());
}

Vector VarianceProblem::gradient(const Vector& theta) const {
  const Vector u = x_ * theta;
  const Vector v = (1.0 - sq_res_.array() * (-u.array()).exp()).matrix();
  return x_.transpose() * v / static_cast<double>(n());
}

double VarianceProblem::objective(const Vector& coef_weights, const Vector& theta) const {
  return loss(theta) + 4.0 * weighted_l1(coef_weights, theta);
}

double VarianceProblem::kkt_residual(const Vector& coef_weights, const Vector& theta) const {
  return kkt_from_gradient(gradient(theta), coef_weights, theta, 4.0);
}

Vector VarianceProblem::unpenalized_start(std::size_t n_unpenalized, const SolverConfig& cfg) const {
  const Eigen::Index p = x_.cols();
  Vector theta = Vector::Zero(p);
  if (n_unpenalized == 0) return theta;
  if (n_unpenalized == 1 && (x_.col(0).array() == 1.0).all()) {
    theta(0) = std::log(sq_res_.mean());
    return theta;
  }
  Vector c = Vector::Constant(p, std::numeric_limits<double>::infinity());
  c.head(static_cast<Eigen::Index>(n_unpenalized)).setZero();
  return solve(c, cfg, theta).coef;
}

double VarianceProblem::lambda_max(std::size_t n_unpenalized, const SolverConfig& cfg) const {
  const auto k = static_cast<Eigen::Index>(n_unpenalized);
  if (x_.cols() == k) return 0.0;
  const Vector g = gradient(unpenalized_start(n_unpenalized, cfg));
  return g.tail(x_.cols() - k).cwiseAbs().maxCoeff() / 4.0;
}

SolveResult VarianceProblem::solve(const Vector& coef_weights, const SolverConfig& cfg,
                                   const Vector& init) const {
  const Eigen::Index p = x_.cols();
  const Eigen::Index n_obs = x_.rows();
  const double n = static_cast<double>(n_obs);
  check_weights(coef_weights, p, "solve_variance_l1");
  if (init.size() != p) throw DimensionError("solve_variance_l1: init has wrong length");

  const double kkt_abs = cfg.kkt_tol * grad_scale_;
  Vector theta = init;
  Vector u = x_ * theta;
  Vector s = (sq_res_.array() * (-u.array()).exp()).matrix();
  Vector trial(n_obs);

  auto current_objective = [&] { return (u.sum() + s.sum()) / n + 4.0 * weighted_l1(coef_weights, theta); };

  auto update = [&](Eigen::Index j) {
    const auto col = x_.col(j);
    const double g = (col.array() * (1.0 - s.array())).sum() / n;
    const double h = (col.array().square() * s.array()).sum() / n;
    if (!(h > 0.0) || !std::isfinite(h)) return;
    const double thr = 4.0 * coef_weights(j);
    const double target = soft_threshold(theta(j) - g / h, thr / h);
    const double d = target - theta(j);
    if (d == 0.0) return;
    const double phi0 = s.sum() / n + (thr > 0.0 ? thr * std::abs(theta(j)) : 0.0);
    const double col_sum = col.sum();
    double step = 1.0;
    for (int halving = 0; halving < 40; ++halving) {
      const double delta = step * d;
      trial = (-delta * col.array()).exp().matrix();
      const double next = theta(j) + delta;
      const double phi = (delta * col_sum + s.dot(trial)) / n +
                         (thr > 0.0 && next != 0.0 ? thr * std::abs(next) : 0.0);
      if (phi <= phi0) {
        theta(j) = next;
        u += delta * col;
        s = s.cwiseProduct(trial);
        return;
      }
      step *= 0.5;
    }
  };

  SolveResult res;
  double obj = current_objective();
  bool full = true;
  int full_sweeps = 0;
  int sweeps = 0;
  bool converged = false;
  std::vector<Eigen::Index> active;
  while (sweeps < cfg.max_inner_iters) {
    if (full) {
      for (Eigen::Index j = 0; j < p; ++j) update(j);
      ++full_sweeps;
      s = (sq_res_.array() * (-u.array()).exp()).matrix();
    } else {
      active.clear();
      for (Eigen::Index j = 0; j < p; ++j) {
        if (theta(j) != 0.0 || coef_weights(j) == 0.0) active.push_back(j);
      }
      for (Eigen::Index j : active) update(j);
    }
    ++sweeps;
    const double next = current_objective();
    const bool small = small_change(obj, next, cfg.inner_tol);
    obj = next;
    if (full) {
      if (small) {
        const Vector v = (1.0 - s.array()).matrix();
        const Vector g = x_.transpose() * v / n;
        if (kkt_from_gradient(g, coef_weights, theta, 4.0) <= kkt_abs) {
          converged = true;
          break;
        }
      }
      if (full_sweeps >= 2) full = false;
    } else if (small) {
      full = true;
    }
  }
  res.coef = std::move(theta);
  res.objective = objective(coef_weights, res.coef);
  res.iterations = sweeps;
  res.kkt_residual = kkt_residual(coef_weights, res.coef);
  res.converged = converged;
  return res;
}

SolveResult solve_variance_l1(const Matrix& x, const Vector& sq_residuals, const Vector& coef_weights,
                              const SolverConfig& cfg, const Vector& init) {
  return VarianceProblem(x, sq_residuals).solve(coef_weights, cfg, init);
}

// ---------------------------------------------------------------------------
// Local linear approximation

int LlaResult::monotonicity_violations(double slack) const {
  int count = 0;
  for (std::size_t k = 1; k < objective_trace.size(); ++k) {
    const double prev = objective_trace[k - 1];
    if (objective_trace[k] > prev + slack * std::max(1.0, std::abs(prev))) ++count;
  }
  return count;
}

double mean_penalized_objective(const WeightedLeastSquares& prob, const PenaltySpec& spec,
                                std::size_t n_unpenalized, const Vector& beta) {
  return prob.loss(beta) + 2.0 * penalty_sum(spec, beta, n_unpenalized);
}

double variance_penalized_objective(const VarianceProblem& prob, const PenaltySpec& spec,
                                    std::size_t n_unpenalized, const Vector& theta) {
  return prob.loss(theta) + 4.0 * penalty_sum(spec, theta, n_unpenalized);
}

namespace {

template <class Problem, class Objective>
LlaResult run_lla(const Problem& prob, const PenaltySpec& spec, std::size_t n_unpenalized,
                  const SolverConfig& cfg, const Vector& init, Objective&& penalized_objective) {
  spec.validate();
  cfg.validate();
  const Vector zero = Vector::Zero(init.size());
  SolveResult step = prob.solve(lla_weights(spec, zero, n_unpenalized), cfg, init);

  LlaResult out;
  out.inner_iterations = step.iterations;
  out.inner_converged = step.converged;
  out.l1_coef = step.coef;
  out.objective_trace.push_back(penalized_objective(step.coef));
  Vector current = std::move(step.coef);
  if (spec.family == PenaltyFamily::SCAD) {
    out.converged = false;
    for (int k = 0; k < cfg.max_lla_iters; ++k) {
      step = prob.solve(lla_weights(spec, current, n_unpenalized), cfg, current);
      out.inner_iterations += step.iterations;
      out.inner_converged = out.inner_converged && step.converged;
      out.lla_iterations = k + 1;
      out.objective_trace.push_back(penalized_objective(step.coef));
      const double change = (step.coef - current).cwiseAbs().maxCoeff();
      current = std::move(step.coef);
      if (change < cfg.lla_tol) {
        out.converged = true;
        break;
      }
    }
  }
  out.coef = std::move(current);
  return out;
}

}  // namespace

LlaResult lla_solve(const WeightedLeastSquares& mean_problem, const PenaltySpec& spec,
                    std::size_t n_unpenalized, const SolverConfig& cfg, const Vector& init) {
  return run_lla(mean_problem, spec, n_unpenalized, cfg, init, [&](const Vector& b) {
    return mean_penalized_objective(mean_problem, spec, n_unpenalized, b);
  });
}

LlaResult lla_solve(const VarianceProblem& variance_problem, const PenaltySpec& spec,
                    std::size_t n_unpenalized, const SolverConfig& cfg, const Vector& init) {
  return run_lla(variance_problem, spec, n_unpenalized, cfg, init, [&](const Vector& t) {
    return variance_penalized_objective(variance_problem, spec, n_unpenalized, t);
  });
}

}  // namespace hippo
