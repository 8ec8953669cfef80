#include "hippo/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hippo {

std::string to_string(Criterion c) { return c == Criterion::AIC ? "AIC" : "BIC"; }

Criterion parse_criterion(const std::string& s) {
  if (s == "aic" || s == "AIC") return Criterion::AIC;
  if (s == "bic" || s == "BIC") return Criterion::BIC;
  throw Error("unknown criterion '" + s + "'");
}

std::string to_string(GlsWeights g) { return g == GlsWeights::InverseSd ? "inverse-sd" : "inverse-variance"; }

GlsWeights parse_gls_weights(const std::string& s) {
  if (s == "inverse-sd") return GlsWeights::InverseSd;
  if (s == "inverse-variance") return GlsWeights::InverseVariance;
  throw Error("unknown gls weighting '" + s + "'");
}

namespace {

void validate_lambdas(const std::vector<double>& g, const char* name) {
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!(g[k] > 0.0) || !std::isfinite(g[k])) throw Error(std::string(name) + ": values must be positive");
    if (k > 0 && !(g[k] < g[k - 1])) throw Error(std::string(name) + ": values must be strictly descending");
  }
}

PenaltySpec penalty_for(const PipelineConfig& cfg, double lambda) {
  return {cfg.penalty_family, lambda, cfg.scad_a};
}

std::size_t mean_unpenalized(const Dataset& d) { return d.has_mean_intercept() ? 1 : 0; }
std::size_t var_unpenalized(const Dataset& d) { return d.has_var_intercept() ? 1 : 0; }

}  // namespace

void GridSpec::validate() const {
  validate_lambdas(lambda_s_grid, "lambda_s_grid");
  validate_lambdas(lambda_t_grid, "lambda_t_grid");
  if (n_points < 1) throw Error("grid: n_points must be >= 1");
  if (!(min_ratio > 0.0 && min_ratio <= 1.0)) throw Error("grid: min_ratio must lie in (0, 1]");
  if (!(variance_floor >= 0.0) || !std::isfinite(variance_floor)) throw Error("grid: variance_floor must be >= 0");
}

std::size_t support_cap(const GridSpec& grid, std::size_t n) {
  if (grid.max_support < 0) return std::numeric_limits<std::size_t>::max();
  if (grid.max_support > 0) return static_cast<std::size_t>(grid.max_support);
  if (n < 3) return 1;
  return std::max<std::size_t>(1, static_cast<std::size_t>(static_cast<double>(n) / std::log(static_cast<double>(n))));
}

double variance_noise_level(const Dataset& d) {
  const std::size_t p = d.p();
  if (p < 2) return 0.0;
  const double rms = std::sqrt(d.x().squaredNorm() / static_cast<double>(d.x().size()));
  return 0.5 * rms * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(d.n()));
}

void PipelineConfig::validate() const {
  if (n_sweeps < 1) throw Error("pipeline: n_sweeps must be >= 1");
  if (penalty_family == PenaltyFamily::SCAD && !(scad_a > 2.0)) throw Error("pipeline: SCAD requires a > 2");
  solver.validate();
}

std::vector<double> log_spaced_grid(double lambda_max, int n_points, double min_ratio) {
  if (!(lambda_max > 0.0)) lambda_max = std::numeric_limits<double>::min();
  std::vector<double> g(static_cast<std::size_t>(n_points));
  if (n_points == 1) {
    g[0] = lambda_max;
    return g;
  }
  const double step = std::log(min_ratio) / (n_points - 1);
  for (int k = 0; k < n_points; ++k) g[static_cast<std::size_t>(k)] = lambda_max * std::exp(step * k);
  return g;
}

double PathPoint::criterion(Criterion c, std::size_t n) const {
  const double per_df = c == Criterion::AIC ? 2.0 : std::log(static_cast<double>(n));
  return nll + per_df * df;
}

std::size_t select_point(const StagePath& path, Criterion c, std::size_t n) {
  if (path.points.empty()) throw Error("select_point: empty path");
  std::size_t best = 0;
  double best_value = path.points[0].criterion(c, n);
  for (std::size_t k = 1; k < path.points.size(); ++k) {
    const double v = path.points[k].criterion(c, n);
    const auto& pt = path.points[k];
    if (v < best_value || (v == best_value && pt.df < path.points[best].df)) {
      best = k;
      best_value = v;
    }
  }
  return best;
}

double information_criterion(const Dataset& d, const ModelParams& p, Criterion kind) {
  const double per_df = kind == Criterion::AIC ? 2.0 : std::log(static_cast<double>(d.n()));
  return neg_log_likelihood(d, p) + per_df * degrees_of_freedom(p);
}

bool degenerate_residuals(const Vector& resid, const Vector& y) {
  const double scale = std::max(y.squaredNorm(), std::numeric_limits<double>::min());
  return !(resid.squaredNorm() > 1e-20 * scale);
}

Vector intercept_only_theta(const Dataset& d, const Vector& resid) {
  Vector theta = Vector::Zero(static_cast<Eigen::Index>(d.var_dim()));
  if (d.has_var_intercept()) {
    const double m = resid.squaredNorm() / static_cast<double>(resid.size());
    const double lg = m > 0.0 ? std::log(m) : -kLinearPredictorClip;
    theta(0) = std::clamp(lg, -kLinearPredictorClip, kLinearPredictorClip);
  }
  return theta;
}

Vector stage3_weights(const Dataset& d, const Vector& theta, GlsWeights gls) {
  ModelParams p{Vector::Zero(static_cast<Eigen::Index>(d.mean_dim())), theta};
  const Vector eta = variance_linear_predictor(d, p);
  const double power = gls == GlsWeights::InverseSd ? 0.5 : 1.0;
  return (-power * eta.array()).exp().matrix();
}

// ---------------------------------------------------------------------------
// Single-lambda stages

LlaResult fit_stage1(const Dataset& d, const PenaltySpec& spec, const SolverConfig& cfg) {
  const WeightedLeastSquares prob(d.mean_design(), d.y(), Vector::Ones(static_cast<Eigen::Index>(d.n())));
  return lla_solve(prob, spec, mean_unpenalized(d), cfg, Vector::Zero(static_cast<Eigen::Index>(d.mean_dim())));
}

LlaResult fit_stage2(const Dataset& d, const Vector& beta, const PenaltySpec& spec, const SolverConfig& cfg) {
  ModelParams p{beta, Vector::Zero(static_cast<Eigen::Index>(d.var_dim()))};
  const Vector r = residuals(d, p);
  if (degenerate_residuals(r, d.y())) throw DegenerateResiduals();
  const VarianceProblem prob(d.variance_design(), r.array().square().matrix());
  const auto k = var_unpenalized(d);
  return lla_solve(prob, spec, k, cfg, prob.unpenalized_start(k, cfg));
}

LlaResult fit_stage3(const Dataset& d, const Vector& theta, const PenaltySpec& spec, const SolverConfig& cfg,
                     GlsWeights gls) {
  const WeightedLeastSquares prob(d.mean_design(), d.y(), stage3_weights(d, theta, gls));
  return lla_solve(prob, spec, mean_unpenalized(d), cfg, Vector::Zero(static_cast<Eigen::Index>(d.mean_dim())));
}

// ---------------------------------------------------------------------------
// Tuned stages

StagePath tune_mean_stage(const Dataset& d, const Vector& obs_weights, const std::optional<Vector>& theta,
                          std::vector<double> lambdas, const GridSpec& grid, const PipelineConfig& cfg) {
  const WeightedLeastSquares prob(d.mean_design(), d.y(), obs_weights);
  const auto k = mean_unpenalized(d);
  if (lambdas.empty()) lambdas = log_spaced_grid(prob.lambda_max(k), grid.n_points, grid.min_ratio);
  const std::size_t cap = support_cap(grid, d.n());

  StagePath path;
  Vector warm = Vector::Zero(static_cast<Eigen::Index>(d.mean_dim()));
  for (double lam : lambdas) {
    PathPoint pt;
    pt.lambda = lam;
    pt.fit = lla_solve(prob, penalty_for(cfg, lam), k, cfg.solver, warm);
    warm = pt.fit.l1_coef;
    pt.coef = pt.fit.coef;
    if (!path.points.empty() && support(pt.coef, k).size() > cap) break;
    path.mm_violations += pt.fit.monotonicity_violations();
    const ModelParams mp{pt.coef, theta ? *theta : Vector::Zero(static_cast<Eigen::Index>(d.var_dim()))};
    pt.nll = neg_log_likelihood(d, mp);
    pt.df = degrees_of_freedom(mp);
    path.points.push_back(std::move(pt));
  }
  return path;
}

StagePath tune_variance_stage(const Dataset& d, const Vector& beta, std::vector<double> lambdas,
                              const GridSpec& grid, const PipelineConfig& cfg) {
  const Vector r = residuals(d, {beta, Vector::Zero(static_cast<Eigen::Index>(d.var_dim()))});
  if (degenerate_residuals(r, d.y())) throw DegenerateResiduals();
  const VarianceProblem prob(d.variance_design(), r.array().square().matrix());
  const auto k = var_unpenalized(d);
  if (lambdas.empty()) {
    const double lmax = prob.lambda_max(k, cfg.solver);
    const double floor = grid.variance_floor * variance_noise_level(d);
    if (floor >= lmax) {
      lambdas = {lmax > 0.0 ? lmax : std::numeric_limits<double>::min()};
    } else {
      lambdas = log_spaced_grid(lmax, grid.n_points, std::max(grid.min_ratio, floor / lmax));
    }
  }
  const std::size_t cap = support_cap(grid, d.n());

  StagePath path;
  Vector warm = prob.unpenalized_start(k, cfg.solver);
  for (double lam : lambdas) {
    PathPoint pt;
    pt.lambda = lam;
    pt.fit = lla_solve(prob, penalty_for(cfg, lam), k, cfg.solver, warm);
    warm = pt.fit.l1_coef;
    pt.coef = pt.fit.coef;
    if (!path.points.empty() && support(pt.coef, k).size() > cap) break;
    path.mm_violations += pt.fit.monotonicity_violations();
    const ModelParams mp{beta, pt.coef};
    pt.nll = neg_log_likelihood(d, mp);
    pt.df = degrees_of_freedom(mp);
    path.points.push_back(std::move(pt));
  }
  return path;
}

// ---------------------------------------------------------------------------
// Full pipeline

namespace {

StageRecord record_stage(const std::string& name, int sweep, const StagePath& path, std::size_t idx,
                         Criterion c, std::size_t n) {
  const PathPoint& pt = path.points[idx];
  StageRecord rec;
  rec.stage = name;
  rec.sweep = sweep;
  rec.lambda = pt.lambda;
  rec.criterion_value = pt.criterion(c, n);
  rec.df = pt.df;
  rec.grid_size = static_cast<int>(path.points.size());
  rec.lla_iterations = pt.fit.lla_iterations;
  rec.inner_iterations = pt.fit.inner_iterations;
  rec.converged = pt.fit.inner_converged;
  rec.objective_trace = pt.fit.objective_trace;
  return rec;
}

struct SweepOutcome {
  Vector beta;
  Vector theta;
  double lambda_s = 0.0;
  double lambda_t = 0.0;
};

SweepOutcome sweep_stagewise(const Dataset& d, const Vector& beta_prev, const GridSpec& grid,
                             const PipelineConfig& cfg, FitResult& out, int sweep) {
  const std::size_t n = d.n();
  const Criterion crit = grid.criterion;
  SweepOutcome o;
  const StagePath var_path = tune_variance_stage(d, beta_prev, grid.lambda_t_grid, grid, cfg);
  out.mm_violations += var_path.mm_violations;
  const std::size_t t = select_point(var_path, crit, n);
  out.stages.push_back(record_stage("stage2", sweep, var_path, t, crit, n));
  o.theta = var_path.points[t].coef;
  o.lambda_t = var_path.points[t].lambda;

  const StagePath mean_path =
      tune_mean_stage(d, stage3_weights(d, o.theta, cfg.gls_weights), o.theta, grid.lambda_s_grid, grid, cfg);
  out.mm_violations += mean_path.mm_violations;
  const std::size_t s = select_point(mean_path, crit, n);
  out.stages.push_back(record_stage("stage3", sweep, mean_path, s, crit, n));
  o.beta = mean_path.points[s].coef;
  o.lambda_s = mean_path.points[s].lambda;
  return o;
}

// Joint choice of (lambda_T, lambda_S) over the product grid for one sweep.
SweepOutcome sweep_product(const Dataset& d, const Vector& beta_prev, const GridSpec& grid,
                           const PipelineConfig& cfg, FitResult& out, int sweep) {
  const std::size_t n = d.n();
  const Criterion crit = grid.criterion;
  const StagePath var_path = tune_variance_stage(d, beta_prev, grid.lambda_t_grid, grid, cfg);
  out.mm_violations += var_path.mm_violations;

  double best_value = std::numeric_limits<double>::infinity();
  int best_df = std::numeric_limits<int>::max();
  std::size_t best_t = 0;
  std::size_t best_s = 0;
  StagePath best_mean;
  for (std::size_t t = 0; t < var_path.points.size(); ++t) {
    const Vector& theta = var_path.points[t].coef;
    StagePath mean_path =
        tune_mean_stage(d, stage3_weights(d, theta, cfg.gls_weights), theta, grid.lambda_s_grid, grid, cfg);
    out.mm_violations += mean_path.mm_violations;
    const std::size_t s = select_point(mean_path, crit, n);
    const double v = mean_path.points[s].criterion(crit, n);
    if (v < best_value || (v == best_value && mean_path.points[s].df < best_df)) {
      best_value = v;
      best_df = mean_path.points[s].df;
      best_t = t;
      best_s = s;
      best_mean = std::move(mean_path);
    }
  }
  out.stages.push_back(record_stage("stage2", sweep, var_path, best_t, crit, n));
  out.stages.push_back(record_stage("stage3", sweep, best_mean, best_s, crit, n));
  SweepOutcome o;
  o.theta = var_path.points[best_t].coef;
  o.lambda_t = var_path.points[best_t].lambda;
  o.beta = best_mean.points[best_s].coef;
  o.lambda_s = best_mean.points[best_s].lambda;
  return o;
}

}  // namespace

FitResult fit_hippo(const Dataset& d, const GridSpec& grid, const PipelineConfig& cfg) {
  grid.validate();
  cfg.validate();
  const std::size_t n = d.n();
  const Criterion crit = grid.criterion;

  FitResult out;
  out.penalty_family = cfg.penalty_family;
  out.criterion = crit;

  const StagePath first = tune_mean_stage(d, Vector::Ones(static_cast<Eigen::Index>(n)), std::nullopt,
                                          grid.lambda_s_grid, grid, cfg);
  out.mm_violations += first.mm_violations;
  const std::size_t s0 = select_point(first, crit, n);
  out.stages.push_back(record_stage("stage1", 0, first, s0, crit, n));
  Vector beta = first.points[s0].coef;
  double lambda_s = first.points[s0].lambda;

  for (int sweep = 1; sweep <= cfg.n_sweeps; ++sweep) {
    SweepRecord rec;
    bool degenerate = false;
    try {
      const SweepOutcome o = grid.full_product ? sweep_product(d, beta, grid, cfg, out, sweep)
                                               : sweep_stagewise(d, beta, grid, cfg, out, sweep);
      beta = o.beta;
      lambda_s = o.lambda_s;
      rec.params = {o.beta, o.theta};
      rec.lambda_t = o.lambda_t;
    } catch (const DegenerateResiduals&) {
      degenerate = true;
      out.homoscedastic_fallback = true;
      const Vector r = residuals(d, {beta, Vector::Zero(static_cast<Eigen::Index>(d.var_dim()))});
      rec.params = {beta, intercept_only_theta(d, r)};
    }
    rec.lambda_s = lambda_s;
    rec.criterion_value = information_criterion(d, rec.params, crit);
    rec.df = degrees_of_freedom(rec.params);
    out.sweeps.push_back(rec);
    if (degenerate) break;
  }

  const SweepRecord& last = out.sweeps.back();
  out.params = last.params;
  out.lambda_s = last.lambda_s;
  out.lambda_t = last.lambda_t;
  out.criterion_value = last.criterion_value;
  out.df = last.df;
  for (const auto& st : out.stages) out.converged = out.converged && st.converged;
  out.objective_trace = out.stages.back().objective_trace;
  return out;
}

FitResult fit_hhr(const Dataset& d, const GridSpec& grid, PipelineConfig cfg) {
  cfg.penalty_family = PenaltyFamily::L1;
  return fit_hippo(d, grid, cfg);
}

}  // namespace hippo
