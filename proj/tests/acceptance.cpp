// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero if
// any criterion fails. Pass criterion numbers as arguments to run a subset.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <thread>

#include "helpers.hpp"
#include "hippo/evaluation.hpp"
#include "hippo/io.hpp"
#include "hippo/simulation.hpp"
#include "hippo/solvers.hpp"

using namespace hippo;
using testing::gaussian_matrix;
using testing::gaussian_vector;

namespace {

// Tolerances and bands.
constexpr double kEx1ThetaLo = 0.11, kEx1ThetaHi = 0.41;
constexpr double kRecallTarget = 1.00, kRecallTol = 0.02;
constexpr double kEx2BetaCenter200 = 0.08, kEx2BetaTol200 = 0.06;
constexpr double kEx2BetaCenter400 = 0.06, kEx2BetaTol400 = 0.29;
constexpr double kPrecisionMin = 0.90, kRecallMin = 0.98;
constexpr double kWlsTol = 1e-6;
constexpr double kGridTol = 2e-3;
constexpr double kKktTol = 1e-4;
constexpr double kClosedFormTol = 1e-8;
constexpr double kMmSlack = 1e-9;
constexpr double kKsMax = 0.08;
constexpr double kCovTol = 0.02;
constexpr std::uint64_t kSeed = 42;

int failures = 0;

void verdict(const std::string& id, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("%s  [%s] %s\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

const CellSummary& cell(const SimulationReport& r, const std::string& est, int iteration) {
  for (const auto& c : r.cells)
    if (c.estimator == est && c.iteration == iteration) return c;
  throw Error("missing cell " + est);
}

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

std::vector<SimulationReport> mm_reports;

void criterion1() {
  SimulationSpec spec;
  spec.example = Example::Ex1;
  spec.n = 200;
  spec.p = 2000;
  spec.rho = 0.0;
  spec.reps = 100;
  spec.master_seed = kSeed;
  spec.jobs = jobs();
  const SimulationReport r = run_monte_carlo(spec, PipelineConfig{});
  mm_reports.push_back(r);
  const CellSummary& hippo = cell(r, "HIPPO-BIC", 1);
  const CellSummary& hhr = cell(r, "HHR-BIC", 1);
  const double e = hippo.theta_error.mean;
  verdict("1a", e >= kEx1ThetaLo && e <= kEx1ThetaHi && e < hhr.theta_error.mean && r.failures.empty(),
          fmt("ex1 rho=0: HIPPO-BIC theta error %.4f in [0.11, 0.41] and below HHR-BIC %.4f", e,
              hhr.theta_error.mean));
  const bool rec = std::fabs(hippo.recall_theta.mean - kRecallTarget) <= kRecallTol &&
                   std::fabs(hhr.recall_theta.mean - kRecallTarget) <= kRecallTol;
  verdict("1b", rec,
          fmt("ex1 rho=0: recall HIPPO-BIC %.4f, HHR-BIC %.4f within 1.00 +- 0.02", hippo.recall_theta.mean,
              hhr.recall_theta.mean));
}

void criterion2() {
  for (std::size_t n : {200u, 400u}) {
    SimulationSpec spec;
    spec.example = Example::Ex2;
    spec.n = n;
    spec.p = 600;
    spec.reps = 100;
    spec.master_seed = kSeed;
    spec.jobs = jobs();
    const SimulationReport r = run_monte_carlo(spec, PipelineConfig{});
    mm_reports.push_back(r);
    const std::string tag = "ex2 n=" + std::to_string(n);
    const CellSummary& h2 = cell(r, "HIPPO-BIC", 2);
    const double center = n == 200 ? kEx2BetaCenter200 : kEx2BetaCenter400;
    const double tol = n == 200 ? kEx2BetaTol200 : kEx2BetaTol400;
    const double e = h2.beta_error.mean;
    verdict("2a n=" + std::to_string(n), std::fabs(e - center) <= tol && r.failures.empty(),
            tag + fmt(": HIPPO-BIC 2nd-iteration beta error %.4f vs %.2f +- %.2f", e, center, tol));
    verdict("2b n=" + std::to_string(n),
            h2.precision_beta.mean >= kPrecisionMin && h2.recall_beta.mean >= kRecallMin,
            tag + fmt(": HIPPO-BIC precision %.4f >= 0.90, recall %.4f >= 0.98", h2.precision_beta.mean,
                      h2.recall_beta.mean));
    bool ordered = true;
    std::string detail = tag + ": beta error it1 -> it2:";
    for (const auto& est : default_estimators()) {
      const double a = cell(r, est.name(), 1).beta_error.mean;
      const double b = cell(r, est.name(), 2).beta_error.mean;
      ordered = ordered && b < a;
      detail += " " + est.name() + fmt(" %.3f->%.3f", a, b);
    }
    verdict("2c n=" + std::to_string(n), ordered, detail);
  }
}

void criterion3() {
  Rng rng(kSeed);
  const SolverConfig cfg;

  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Matrix x = gaussian_matrix(20, 3, rng);
    const Vector y = gaussian_vector(20, rng);
    Vector w(20);
    for (int i = 0; i < 20; ++i) w(i) = 0.5 + rng.uniform();
    const Vector exact =
        (x.transpose() * w.asDiagonal() * x).ldlt().solve(x.transpose() * w.asDiagonal() * y);
    const WeightedLeastSquares prob(x, y, w);
    const SolveResult r = prob.solve(Vector::Zero(3), cfg, Vector::Zero(3));
    worst = std::max(worst, (r.coef - exact).lpNorm<Eigen::Infinity>());
  }
  verdict("3a", worst <= kWlsTol, fmt("unpenalized WLS vs closed form, 20 instances: max error %.2e", worst));

  worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    Matrix x(100, 2);
    x.col(0).setOnes();
    x.col(1) = gaussian_vector(100, rng);
    const double t0 = rng.normal() * 0.5, t1 = rng.normal() * 0.7;
    Vector e(100);
    for (int i = 0; i < 100; ++i) e(i) = std::exp(t0 + t1 * x(i, 1)) * std::pow(rng.normal(), 2);
    Vector c(2);
    c << 0.0, 0.05 * rng.uniform();
    const VarianceProblem prob(x, e);
    const SolveResult r = prob.solve(c, cfg, Vector::Zero(2));
    const auto f = [&](double a, double b) {
      Vector t(2);
      t << a, b;
      return testing::variance_objective_oracle(x, e, c, t);
    };
    const auto [a, b] = testing::grid_minimize_2d(f, 0.0, 0.0, 5.0, 6);
    worst = std::max({worst, std::fabs(r.coef(0) - a), std::fabs(r.coef(1) - b)});
  }
  verdict("3b", worst <= kGridTol, fmt("variance CD vs 2-D grid search, 10 instances: max error %.2e", worst));

  worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const Eigen::Index n = 50, p = 10 + (k % 5) * 5;
    const Matrix x = gaussian_matrix(n, p, rng);
    Vector truth = Vector::Zero(p);
    truth.head(3) << 1.5, -1.0, 0.7;
    const double frac = 0.05 + 0.5 * rng.uniform();
    if (k % 2 == 0) {
      const Vector y = x * truth + gaussian_vector(n, rng);
      Vector w(n);
      for (Eigen::Index i = 0; i < n; ++i) w(i) = 0.3 + rng.uniform();
      const WeightedLeastSquares prob(x, y, w);
      const Vector c = Vector::Constant(p, frac * prob.lambda_max(0));
      const SolveResult r = prob.solve(c, cfg, Vector::Zero(p));
      worst = std::max(worst, testing::mean_kkt_oracle(x, y, w, c, r.coef));
    } else {
      Vector e(n);
      const Vector u = x * truth * 0.5;
      for (Eigen::Index i = 0; i < n; ++i) e(i) = std::exp(u(i)) * std::pow(rng.normal(), 2);
      const VarianceProblem prob(x, e);
      const Vector c = Vector::Constant(p, frac * prob.lambda_max(0, cfg));
      const SolveResult r = prob.solve(c, cfg, Vector::Zero(p));
      worst = std::max(worst, testing::variance_kkt_oracle(x, e, c, r.coef));
    }
  }
  verdict("3c", worst <= kKktTol, fmt("KKT residual over 50 lasso instances: max %.2e", worst));
}

void criterion4() {
  Rng rng(kSeed + 1);
  const SolverConfig cfg;
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const Vector e = (gaussian_vector(80, rng) * std::exp(rng.normal())).array().square();
    const VarianceProblem prob(Matrix::Ones(80, 1), e);
    const SolveResult r = prob.solve(Vector::Zero(1), cfg, Vector::Zero(1));
    worst = std::max(worst, std::fabs(r.coef(0) - std::log(e.mean())));
  }
  verdict("4a", worst <= kClosedFormTol, fmt("intercept-only variance fit vs log(mean e^2): max error %.2e", worst));

  worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    Matrix x = gaussian_matrix(60, 1, rng);
    x *= std::sqrt(60.0) / x.norm();
    const Vector y = rng.normal() * x.col(0) + gaussian_vector(60, rng);
    const double z = x.col(0).dot(y) / 60.0;
    const double lam = 1.5 * std::fabs(z) * rng.uniform();
    const WeightedLeastSquares prob(x, y, Vector::Ones(60));
    const SolveResult r = prob.solve(Vector::Constant(1, lam), cfg, Vector::Zero(1));
    worst = std::max(worst, std::fabs(r.coef(0) - soft_threshold(z, lam)));
  }
  verdict("4b", worst <= kClosedFormTol, fmt("1-D lasso vs soft threshold: max error %.2e", worst));
}

void criterion5() {
  if (mm_reports.empty()) {
    verdict("5", false, "no simulation fits available (run criteria 1 and 2 in the same invocation)");
    return;
  }
  int total = 0;
  std::size_t fits = 0;
  for (const auto& r : mm_reports) {
    total += r.mm_violations;
    fits += r.records.size();
  }
  verdict("5", total == 0,
          fmt("MM monotonicity violations (slack %.0e) over %.0f replicate records: %.0f", kMmSlack,
              static_cast<double>(fits), static_cast<double>(total)));
}

void criterion6() {
  OracleCheckSpec spec;
  spec.s = 2;
  const double ks = oracle_normality_check(500, 500, spec);
  verdict("6", ks < kKsMax, fmt("oracle normality n=500 s=2 500 reps: KS %.4f < 0.08", ks));
}

double cov_deviation(const Matrix& x, const Matrix& target) {
  const Matrix c = x.rowwise() - x.colwise().mean();
  const Matrix s = c.transpose() * c / static_cast<double>(x.rows() - 1);
  return (s - target).cwiseAbs().maxCoeff();
}

void criterion7() {
  double worst = 0.0;
  for (double rho : {0.0, 0.5}) {
    const GeneratedData g = generate_example1(20000, 6, rho, kSeed);
    Matrix target = Matrix::Identity(6, 6);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j) target(i, j) = rho;
    worst = std::max(worst, cov_deviation(g.data.x(), target));
  }
  const GeneratedData g2 = generate_example2(20000, kSeed, 15);
  Matrix ar(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) ar(i, j) = std::pow(0.5, std::abs(i - j));
  const double dev2 = cov_deviation(g2.data.x().leftCols(6), ar);
  verdict("7", worst <= kCovTol && dev2 <= kCovTol,
          fmt("sample covariance n=20000, leading 6x6: equicorrelated max dev %.5f, AR(1) max dev %.5f (limit 0.02)", worst, dev2));
}

void criterion8() {
  bool same = true;
  for (Example ex : {Example::Ex1, Example::Ex2}) {
    SimulationSpec spec;
    spec.example = ex;
    spec.n = 100;
    spec.p = ex == Example::Ex1 ? 200 : 60;
    spec.reps = 6;
    spec.master_seed = kSeed;
    std::string tsv, json;
    for (int j : {1, 2, 4}) {
      spec.jobs = j;
      const SimulationReport r = run_monte_carlo(spec, PipelineConfig{});
      const std::string t = report_to_tsv(r), js = report_to_json(r);
      if (j == 1) {
        tsv = t;
        json = js;
      } else {
        same = same && t == tsv && js == json;
      }
    }
  }
  verdict("8", same, "TSV and JSON byte-identical for jobs = 1, 2, 4 (examples 1 and 2)");
}

void criterion9() {
  const GeneratedData g = generate_heteroscedastic_standin(900, 31, kSeed);
  PipelineConfig scad, l1;
  l1.penalty_family = PenaltyFamily::L1;
  const CvMetrics a = kfold_cv(g.data, 10, GridSpec{}, scad, kSeed, jobs());
  const CvMetrics b = kfold_cv(g.data, 10, GridSpec{}, l1, kSeed, jobs());
  verdict("9", a.partial_prediction_score < b.partial_prediction_score && a.folds_used == 10 && b.folds_used == 10,
          fmt("10-fold partial prediction score n=900 p=31: HIPPO %.4f < HHR %.4f", a.partial_prediction_score,
              b.partial_prediction_score));
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int k = 1; k < argc; ++k) wanted.insert(std::atoi(argv[k]));
  const auto want = [&](int c) { return wanted.empty() || wanted.count(c) > 0; };

  void (*const runs[])() = {criterion1, criterion2, criterion3, criterion4, criterion5,
                            criterion6, criterion7, criterion8, criterion9};
  // Cheap checks first; 5 needs the fits from 1 and 2.
  const int order[] = {3, 4, 6, 7, 8, 9, 1, 2, 5};
  for (int c : order) {
    if (!want(c)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      runs[c - 1]();
    } catch (const std::exception& e) {
      verdict(std::to_string(c), false, std::string("exception: ") + e.what());
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("      criterion %d took %.1f s\n", c, sec);
  }
  std::printf("%d criterion line(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
