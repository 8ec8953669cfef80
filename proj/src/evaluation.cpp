#include "hippo/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "hippo/random.hpp"
#include "hippo/stats.hpp"

namespace hippo {

double mean_squared_error(const Dataset& d, const ModelParams& p) {
  return residuals(d, p).squaredNorm() / static_cast<double>(d.n());
}

double partial_prediction_score(const Dataset& d, const ModelParams& p) {
  return neg_log_likelihood(d, p) / static_cast<double>(d.n());
}

std::vector<std::vector<std::size_t>> kfold_assignment(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error("kfold: need k >= 2");
  if (n < k) throw Error("kfold: need n >= k");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(idx[i], idx[rng.below(i + 1)]);
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t lo = f * n / k;
    const std::size_t hi = (f + 1) * n / k;
    folds[f].assign(idx.begin() + static_cast<std::ptrdiff_t>(lo), idx.begin() + static_cast<std::ptrdiff_t>(hi));
    std::sort(folds[f].begin(), folds[f].end());
  }
  return folds;
}

namespace {

struct FoldOutcome {
  bool ok = false;
  std::string reason;
  double mse = 0.0;
  double pps = 0.0;
  double support_beta = 0.0;
  double support_theta = 0.0;
  bool fallback = false;
};

}  // namespace

CvMetrics kfold_cv(const Dataset& d, std::size_t k, const GridSpec& grid, const PipelineConfig& cfg,
                   std::uint64_t seed, int jobs) {
  const auto folds = kfold_assignment(d.n(), k, seed);
  std::vector<FoldOutcome> outcomes(k);

  auto run_fold = [&](std::size_t f) {
    FoldOutcome& o = outcomes[f];
    std::vector<char> in_test(d.n(), 0);
    for (std::size_t i : folds[f]) in_test[i] = 1;
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < d.n(); ++i) {
      if (!in_test[i]) train.push_back(i);
    }
    try {
      const Dataset tr = d.subset(train);
      const Dataset te = d.subset(folds[f]);
      const FitResult fit = fit_hippo(tr, grid, cfg);
      o.mse = mean_squared_error(te, fit.params);
      o.pps = partial_prediction_score(te, fit.params);
      o.support_beta = static_cast<double>(support(fit.params.beta, d.has_mean_intercept() ? 1 : 0).size());
      o.support_theta = static_cast<double>(support(fit.params.theta, d.has_var_intercept() ? 1 : 0).size());
      o.fallback = fit.homoscedastic_fallback;
      o.ok = true;
    } catch (const std::exception& e) {
      o.reason = e.what();
    }
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t f = next++; f < k; f = next++) run_fold(f);
  };
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(k)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  CvMetrics m;
  for (std::size_t f = 0; f < k; ++f) {
    const FoldOutcome& o = outcomes[f];
    if (!o.ok) {
      m.skipped_folds.push_back(static_cast<int>(f));
      m.skip_reasons.push_back(o.reason);
      continue;
    }
    ++m.folds_used;
    m.mse += o.mse;
    m.partial_prediction_score += o.pps;
    m.mean_support_beta += o.support_beta;
    m.mean_support_theta += o.support_theta;
    m.fallback_folds += o.fallback;
  }
  if (m.folds_used == 0) throw Error("kfold_cv: every fold failed");
  const double used = m.folds_used;
  m.mse /= used;
  m.partial_prediction_score /= used;
  m.mean_support_beta /= used;
  m.mean_support_theta /= used;
  return m;
}

DiagnosticsReport heteroscedasticity_diagnostics(const Vector& fitted, const Vector& resid, const Vector& scale,
                                                 const std::vector<double>& bins) {
  if (fitted.size() != resid.size()) throw DimensionError("diagnostics: fitted and residuals differ in length");
  if (scale.size() != 0 && scale.size() != resid.size()) throw DimensionError("diagnostics: scale has wrong length");
  if (bins.size() < 3) throw Error("diagnostics: need at least two bins (three breakpoints)");
  for (std::size_t k = 1; k < bins.size(); ++k) {
    if (!(bins[k] > bins[k - 1])) throw Error("diagnostics: breakpoints must be increasing");
  }

  DiagnosticsReport rep;
  if (scale.size() == 0) {
    const double rms = std::sqrt(resid.squaredNorm() / static_cast<double>(resid.size()));
    if (!(rms > 0.0)) throw Error("diagnostics: residuals are all zero");
    rep.studentized = resid / rms;
  } else {
    rep.studentized = resid.cwiseQuotient(scale);
  }

  std::vector<std::vector<double>> members(bins.size() - 1);
  for (Eigen::Index i = 0; i < fitted.size(); ++i) {
    const auto it = std::upper_bound(bins.begin(), bins.end(), fitted(i));
    if (it == bins.begin() || it == bins.end()) continue;
    members[static_cast<std::size_t>(it - bins.begin() - 1)].push_back(rep.studentized(i));
  }

  for (std::size_t b = 0; b < members.size(); ++b) {
    auto& v = members[b];
    if (v.size() < 2) {
      rep.warnings.push_back("bin [" + std::to_string(bins[b]) + ", " + std::to_string(bins[b + 1]) + ") has " +
                             std::to_string(v.size()) + " point(s); excluded");
      continue;
    }
    RunningStats rs;
    for (double x : v) rs.add(x);
    std::sort(v.begin(), v.end());
    BinSummary s;
    s.lower = bins[b];
    s.upper = bins[b + 1];
    s.count = static_cast<int>(v.size());
    s.mean = rs.mean();
    s.variance = rs.variance();
    s.min = v.front();
    s.q1 = quantile_sorted(v, 0.25);
    s.median = quantile_sorted(v, 0.5);
    s.q3 = quantile_sorted(v, 0.75);
    s.max = v.back();
    rep.bins.push_back(s);
  }
  if (rep.bins.size() < 2) rep.warnings.push_back("fewer than two usable bins; no F-tests");

  for (std::size_t a = 0; a < rep.bins.size(); ++a) {
    for (std::size_t b = a + 1; b < rep.bins.size(); ++b) {
      const BinSummary& x = rep.bins[a];
      const BinSummary& y = rep.bins[b];
      const bool x_larger = x.variance >= y.variance;
      const BinSummary& hi = x_larger ? x : y;
      const BinSummary& lo = x_larger ? y : x;
      FTestResult t;
      t.bin_a = a;
      t.bin_b = b;
      t.df_num = hi.count - 1;
      t.df_den = lo.count - 1;
      if (lo.variance > 0.0) {
        t.f = hi.variance / lo.variance;
        t.p_value = std::min(1.0, 2.0 * fisher_f_sf(t.f, t.df_num, t.df_den));
      } else {
        t.f = hi.variance > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
        t.p_value = hi.variance > 0.0 ? 0.0 : 1.0;
      }
      rep.tests.push_back(t);
    }
  }
  return rep;
}

double oracle_normality_check(int reps, std::size_t n, const OracleCheckSpec& spec) {
  if (reps < 1 || n < 1 || spec.s < 1) throw Error("oracle check: reps, n and s must be >= 1");
  const auto s = static_cast<Eigen::Index>(spec.s);
  const auto q = s + static_cast<Eigen::Index>(spec.extra);
  const auto rows = static_cast<Eigen::Index>(n);
  if (rows < s) throw Error("oracle check: need n >= s");

  Rng design_rng(spec.seed);
  Matrix x(rows, q);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < q; ++j) x(i, j) = design_rng.normal();
  }
  Vector theta = Vector::Zero(q);
  theta.tail(q - s + 1).setConstant(spec.theta_value);
  const Vector lin = x * theta;
  const Vector sigma = (lin.array() / 2.0).exp().matrix();
  const Matrix xs = x.leftCols(s);
  const Vector beta = Vector::Constant(s, spec.beta_value);
  const Vector a = Vector::Constant(s, 1.0 / std::sqrt(static_cast<double>(s)));
  const double nn = static_cast<double>(n);

  // Refit weights: unit (OLS) or the true inverse variances (GLS).
  const Vector w = spec.weighted ? Vector((-lin.array()).exp().matrix()) : Vector(Vector::Ones(rows));
  const Matrix gram = xs.transpose() * w.asDiagonal() * xs;
  const Eigen::LDLT<Matrix> solver(gram);

  double zeta2;
  if (spec.weighted) {
    const Matrix dss = gram / nn;
    zeta2 = a.dot(dss.ldlt().solve(a));
  } else {
    const Matrix sss = gram / nn;
    const Matrix mss = xs.transpose() * sigma.array().square().matrix().asDiagonal() * xs / nn;
    const Vector u = sss.ldlt().solve(a);
    zeta2 = u.dot(mss * u);
  }
  const double zeta = std::sqrt(zeta2);

  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    Rng rng(substream_seed(spec.seed, static_cast<std::uint64_t>(r) + 1));
    Vector y(rows);
    for (Eigen::Index i = 0; i < rows; ++i) y(i) = xs.row(i).dot(beta) + sigma(i) * rng.normal();
    const Vector est = solver.solve(xs.transpose() * w.cwiseProduct(y));
    stats.push_back(std::sqrt(nn) * a.dot(est - beta) / zeta);
  }
  return ks_distance_normal(std::move(stats));
}

}  // namespace hippo
