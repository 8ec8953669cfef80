#include "hippo/simulation.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <map>
#include <thread>
#include <utility>

#include "hippo/stats.hpp"

namespace hippo {

namespace {

Vector standard_normal(std::size_t n, Rng& rng) {
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
  return v;
}

}  // namespace

Matrix ar1_design(std::size_t n, std::size_t p, double phi, Rng& rng) {
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  const double innov = std::sqrt(1.0 - phi * phi);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double prev = rng.normal();
    x(i, 0) = prev;
    for (Eigen::Index j = 1; j < x.cols(); ++j) {
      prev = phi * prev + innov * rng.normal();
      x(i, j) = prev;
    }
  }
  return x;
}

GeneratedData generate_example1(std::size_t n, std::size_t p, double rho, std::uint64_t seed) {
  if (p < 3) throw Error("example 1 requires p >= 3");
  if (n < 1) throw Error("example 1 requires n >= 1");
  if (!(rho >= 0.0 && rho < 1.0)) throw Error("example 1 requires rho in [0, 1)");
  Rng rng(seed);

  Eigen::Matrix3d corr = Eigen::Matrix3d::Constant(rho);
  corr.diagonal().setOnes();
  const Eigen::Matrix3d chol = corr.llt().matrixL();

  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  Vector y(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Vector3d z(rng.normal(), rng.normal(), rng.normal());
    x.row(i).head<3>() = (chol * z).transpose();
    for (Eigen::Index j = 3; j < x.cols(); ++j) x(i, j) = rng.normal();
  }
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double lin = x(i, 0) + x(i, 1) + x(i, 2);
    y(i) = std::exp(lin / 2.0) * rng.normal();
  }

  TrueModel truth;
  truth.beta_star = Vector::Zero(static_cast<Eigen::Index>(p));
  truth.theta_star = Vector::Zero(static_cast<Eigen::Index>(p));
  truth.theta_star.head<3>().setOnes();
  truth.covariance = CovarianceKind::EquicorrelatedFirst3;
  truth.rho = rho;
  return {Dataset(std::move(x), std::move(y), false, false), truth};
}

GeneratedData generate_example2(std::size_t n, std::uint64_t seed, std::size_t p) {
  if (n < 1) throw Error("example 2 requires n >= 1");
  if (p < 15) throw Error("example 2 requires p >= 15");
  Rng rng(seed);
  Matrix x = ar1_design(n, p, 0.5, rng);

  const double beta_head[12] = {3, 3, 3, 1.5, 1.5, 1.5, 0, 0, 0, 2, 2, 2};
  const double theta_head[15] = {1, 1, 1, 0, 0, 0, 0.5, 0.5, 0.5, 0, 0, 0, 0.75, 0.75, 0.75};
  const double beta0 = 2.0;
  const double theta0 = 1.0;

  Vector beta = Vector::Zero(static_cast<Eigen::Index>(p));
  Vector theta = Vector::Zero(static_cast<Eigen::Index>(p));
  for (int j = 0; j < 12; ++j) beta(j) = beta_head[j];
  for (int j = 0; j < 15; ++j) theta(j) = theta_head[j];

  const Vector eps = standard_normal(n, rng);
  const Vector scale = (((theta0 + (x * theta).array()) / 2.0).exp()).matrix();
  Vector y = (beta0 + (x * beta).array() + scale.array() * eps.array()).matrix();

  TrueModel truth;
  truth.beta_star.resize(static_cast<Eigen::Index>(p) + 1);
  truth.beta_star << beta0, beta;
  truth.theta_star.resize(static_cast<Eigen::Index>(p) + 1);
  truth.theta_star << theta0, theta;
  truth.covariance = CovarianceKind::AR1;
  truth.rho = 0.5;
  return {Dataset(std::move(x), std::move(y), true, true), truth};
}

GeneratedData generate_heteroscedastic_standin(std::size_t n, std::size_t p, std::uint64_t seed) {
  if (n < 1 || p < 1) throw Error("stand-in generator requires n, p >= 1");
  Rng rng(seed);
  Matrix x = ar1_design(n, p, 0.5, rng);

  Vector beta = Vector::Zero(static_cast<Eigen::Index>(p));
  Vector theta = Vector::Zero(static_cast<Eigen::Index>(p));
  const std::pair<std::size_t, double> mean_effects[] = {{0, 1.0}, {3, -0.8}, {7, 0.6}, {14, 0.5}, {22, -0.4}};
  const std::pair<std::size_t, double> var_effects[] = {{2, 0.8}, {5, -0.6}, {9, 0.5}, {28, 0.7}};
  for (const auto& [j, v] : mean_effects)
    if (j < p) beta(static_cast<Eigen::Index>(j)) = v;
  for (const auto& [j, v] : var_effects)
    if (j < p) theta(static_cast<Eigen::Index>(j)) = v;
  const double beta0 = 1.0;
  const double theta0 = -1.0;

  const Vector eps = standard_normal(n, rng);
  const Vector scale = ((theta0 + (x * theta).array()) / 2.0).exp().matrix();
  Vector y = (beta0 + (x * beta).array() + scale.array() * eps.array()).matrix();

  TrueModel truth;
  truth.beta_star.resize(static_cast<Eigen::Index>(p) + 1);
  truth.beta_star << beta0, beta;
  truth.theta_star.resize(static_cast<Eigen::Index>(p) + 1);
  truth.theta_star << theta0, theta;
  truth.covariance = CovarianceKind::AR1;
  truth.rho = 0.5;
  return {Dataset(std::move(x), std::move(y), true, true), truth};
}

SupportMetrics support_metrics(const Vector& estimated, const Vector& truth, std::size_t offset) {
  if (estimated.size() != truth.size()) throw DimensionError("support_metrics: length mismatch");
  std::size_t est = 0, tru = 0, both = 0;
  for (Eigen::Index j = static_cast<Eigen::Index>(offset); j < truth.size(); ++j) {
    const bool e = estimated(j) != 0.0;
    const bool t = truth(j) != 0.0;
    est += e;
    tru += t;
    both += e && t;
  }
  SupportMetrics m;
  m.precision = est == 0 ? (tru == 0 ? 1.0 : 0.0) : static_cast<double>(both) / static_cast<double>(est);
  m.recall = tru == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(tru);
  return m;
}

std::string Estimator::name() const {
  return std::string(method == PenaltyFamily::SCAD ? "HIPPO" : "HHR") + "-" + to_string(criterion);
}

std::vector<Estimator> default_estimators() {
  return {{PenaltyFamily::L1, Criterion::AIC},
          {PenaltyFamily::SCAD, Criterion::AIC},
          {PenaltyFamily::L1, Criterion::BIC},
          {PenaltyFamily::SCAD, Criterion::BIC}};
}

void SimulationSpec::validate() const {
  if (n < 1 || p < 1 || reps < 1) throw Error("simulation: n, p and reps must be >= 1");
  if (jobs < 1) throw Error("simulation: jobs must be >= 1");
  if (estimators.empty()) throw Error("simulation: no estimators requested");
  if (example == Example::Ex1 && (p < 3 || !(rho >= 0.0 && rho < 1.0))) {
    throw Error("simulation: example 1 needs p >= 3 and rho in [0, 1)");
  }
  if (example == Example::Ex2 && p < 15) throw Error("simulation: example 2 needs p >= 15");
  if (example == Example::Custom && p < 29) throw Error("simulation: custom example needs p >= 29");
}

// ---------------------------------------------------------------------------
// Monte Carlo harness

namespace {

struct ReplicateOutcome {
  std::vector<ReplicateRecord> records;
  std::vector<ReplicateFailure> failures;
  int mm_violations = 0;
};

ReplicateRecord make_record(int rep, const Estimator& est, int iteration, const ModelParams& fitted,
                            const Dataset& d, const TrueModel& truth) {
  const std::size_t mo = d.has_mean_intercept() ? 1 : 0;
  const std::size_t vo = d.has_var_intercept() ? 1 : 0;
  const auto mlen = static_cast<Eigen::Index>(d.p());
  ReplicateRecord rec;
  rec.replicate = rep;
  rec.estimator = est.name();
  rec.iteration = iteration;
  rec.beta_error = (fitted.beta.tail(mlen) - truth.beta_star.tail(mlen)).norm();
  rec.theta_error = (fitted.theta.tail(mlen) - truth.theta_star.tail(mlen)).norm();
  const SupportMetrics sb = support_metrics(fitted.beta, truth.beta_star, mo);
  const SupportMetrics st = support_metrics(fitted.theta, truth.theta_star, vo);
  rec.precision_beta = sb.precision;
  rec.recall_beta = sb.recall;
  rec.precision_theta = st.precision;
  rec.recall_theta = st.recall;
  rec.support_beta = static_cast<int>(support(fitted.beta, mo).size());
  rec.support_theta = static_cast<int>(support(fitted.theta, vo).size());
  return rec;
}

GeneratedData generate_for(const SimulationSpec& spec, std::uint64_t seed) {
  switch (spec.example) {
    case Example::Ex1:
      return generate_example1(spec.n, spec.p, spec.rho, seed);
    case Example::Ex2:
      return generate_example2(spec.n, seed, spec.p);
    case Example::Custom:
      break;
  }
  return generate_heteroscedastic_standin(spec.n, spec.p, seed);
}

ReplicateOutcome run_replicate(const SimulationSpec& spec, const PipelineConfig& cfg, const GridSpec& grid,
                               int rep) {
  ReplicateOutcome out;
  const GeneratedData gen = generate_for(spec, substream_seed(spec.master_seed, static_cast<std::uint64_t>(rep)));
  const Dataset& d = gen.data;

  if (spec.example == Example::Ex1) {
    // Mean known: one variance path per penalty family, selected by each criterion.
    std::map<PenaltyFamily, StagePath> paths;
    std::map<PenaltyFamily, std::string> errors;
    for (const Estimator& est : spec.estimators) {
      if (paths.count(est.method) || errors.count(est.method)) continue;
      PipelineConfig mcfg = cfg;
      mcfg.penalty_family = est.method;
      try {
        paths[est.method] = tune_variance_stage(d, gen.truth.beta_star, grid.lambda_t_grid, grid, mcfg);
        out.mm_violations += paths[est.method].mm_violations;
      } catch (const std::exception& e) {
        errors[est.method] = e.what();
      }
    }
    for (const Estimator& est : spec.estimators) {
      if (errors.count(est.method)) {
        out.failures.push_back({rep, est.name(), errors[est.method]});
        continue;
      }
      const StagePath& path = paths.at(est.method);
      const PathPoint& pt = path.points[select_point(path, est.criterion, d.n())];
      ReplicateRecord rec = make_record(rep, est, 1, {gen.truth.beta_star, pt.coef}, d, gen.truth);
      rec.mm_violations = path.mm_violations;
      rec.converged = pt.fit.inner_converged;
      out.records.push_back(rec);
    }
    return out;
  }

  for (const Estimator& est : spec.estimators) {
    PipelineConfig mcfg = cfg;
    mcfg.penalty_family = est.method;
    mcfg.n_sweeps = std::max(cfg.n_sweeps, 2);
    GridSpec g = grid;
    g.criterion = est.criterion;
    try {
      const FitResult fit = fit_hippo(d, g, mcfg);
      out.mm_violations += fit.mm_violations;
      for (int it = 1; it <= 2; ++it) {
        const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it), fit.sweeps.size()) - 1;
        ReplicateRecord rec = make_record(rep, est, it, fit.sweeps[k].params, d, gen.truth);
        rec.mm_violations = fit.mm_violations;
        rec.converged = fit.converged;
        rec.fallback = fit.homoscedastic_fallback;
        out.records.push_back(rec);
      }
    } catch (const std::exception& e) {
      out.failures.push_back({rep, est.name(), e.what()});
    }
  }
  return out;
}

void add_metrics(std::map<std::pair<std::size_t, int>, std::array<RunningStats, 6>>& acc, std::size_t est_idx,
                 const ReplicateRecord& r) {
  auto& s = acc[{est_idx, r.iteration}];
  s[0].add(r.beta_error);
  s[1].add(r.precision_beta);
  s[2].add(r.recall_beta);
  s[3].add(r.theta_error);
  s[4].add(r.precision_theta);
  s[5].add(r.recall_theta);
}

}  // namespace

std::vector<CellSummary> aggregate(const std::vector<ReplicateRecord>& records,
                                   const std::vector<Estimator>& estimators) {
  std::map<std::string, std::size_t> order;
  for (std::size_t k = 0; k < estimators.size(); ++k) order.emplace(estimators[k].name(), k);
  std::map<std::pair<std::size_t, int>, std::array<RunningStats, 6>> acc;
  for (const auto& r : records) {
    const auto it = order.find(r.estimator);
    if (it != order.end()) add_metrics(acc, it->second, r);
  }
  std::vector<CellSummary> cells;
  for (const auto& [key, s] : acc) {
    CellSummary c;
    c.estimator = estimators[key.first].name();
    c.iteration = key.second;
    c.count = static_cast<int>(s[0].count());
    MetricSummary* slots[6] = {&c.beta_error,  &c.precision_beta,  &c.recall_beta,
                               &c.theta_error, &c.precision_theta, &c.recall_theta};
    for (int m = 0; m < 6; ++m) *slots[m] = {s[static_cast<std::size_t>(m)].mean(), s[static_cast<std::size_t>(m)].sd()};
    cells.push_back(c);
  }
  return cells;
}

SimulationReport run_monte_carlo(const SimulationSpec& spec, const PipelineConfig& cfg, const GridSpec& grid) {
  spec.validate();
  cfg.validate();
  grid.validate();

  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(spec.reps));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < spec.reps; r = next++) {
      try {
        outcomes[static_cast<std::size_t>(r)] = run_replicate(spec, cfg, grid, r);
      } catch (const std::exception& e) {
        outcomes[static_cast<std::size_t>(r)].failures.push_back({r, "*", e.what()});
      }
    }
  };
  const int workers = std::min(spec.jobs, spec.reps);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  SimulationReport report;
  report.spec = spec;
  for (auto& o : outcomes) {
    report.records.insert(report.records.end(), o.records.begin(), o.records.end());
    report.failures.insert(report.failures.end(), o.failures.begin(), o.failures.end());
    report.mm_violations += o.mm_violations;
  }
  report.cells = aggregate(report.records, spec.estimators);
  return report;
}

}  // namespace hippo
