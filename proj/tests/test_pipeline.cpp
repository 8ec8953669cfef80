#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "hippo/pipeline.hpp"
#include "hippo/simulation.hpp"

using namespace hippo;
using testing::gaussian_matrix;
using testing::gaussian_vector;

namespace {

PathPoint point(double lambda, double nll, int df) {
  PathPoint p;
  p.lambda = lambda;
  p.nll = nll;
  p.df = df;
  return p;
}

}  // namespace

TEST_CASE("log-spaced grid runs from lambda_max down to min_ratio * lambda_max") {
  const auto g = log_spaced_grid(2.0, 5, 1e-2);
  REQUIRE(g.size() == 5);
  CHECK(g.front() == doctest::Approx(2.0));
  CHECK(g.back() == doctest::Approx(0.02));
  for (std::size_t k = 1; k < g.size(); ++k) CHECK(g[k] / g[k - 1] == doctest::Approx(g[1] / g[0]));
  CHECK(log_spaced_grid(3.0, 1, 0.5) == std::vector<double>{3.0});
}

TEST_CASE("criteria and point selection") {
  const PathPoint p = point(1.0, 10.0, 3);
  CHECK(p.criterion(Criterion::AIC, 100) == 16.0);
  CHECK(p.criterion(Criterion::BIC, 100) == doctest::Approx(10.0 + 3.0 * std::log(100.0)));

  StagePath path;
  path.points = {point(3.0, 20.0, 1), point(2.0, 12.0, 3), point(1.0, 14.0, 2), point(0.5, 5.0, 9)};
  CHECK(select_point(path, Criterion::AIC, 50) == 2);  // 22, 18, 18, 23: tie goes to smaller df
  CHECK(select_point(path, Criterion::BIC, 50) == 2);
  StagePath two;
  two.points = {point(3.0, 20.0, 1), point(1.0, 10.0, 4)};
  CHECK(select_point(two, Criterion::AIC, 50) == 1);
  CHECK(select_point(two, Criterion::BIC, 50) == 0);
  CHECK_THROWS_AS(select_point(StagePath{}, Criterion::AIC, 1), Error);
}

TEST_CASE("grid validation") {
  GridSpec g;
  CHECK_NOTHROW(g.validate());
  g.lambda_s_grid = {1.0, 2.0};
  CHECK_THROWS_AS(g.validate(), Error);
  g.lambda_s_grid = {2.0, 1.0};
  g.min_ratio = 0.0;
  CHECK_THROWS_AS(g.validate(), Error);
}

TEST_CASE("support cap defaults to n / log n") {
  GridSpec g;
  CHECK(support_cap(g, 200) == static_cast<std::size_t>(200 / std::log(200.0)));
  g.max_support = 7;
  CHECK(support_cap(g, 200) == 7);
  g.max_support = -1;
  CHECK(support_cap(g, 200) > 1000000);
}

TEST_CASE("information criterion is nll plus df penalty") {
  Rng rng(21);
  const Dataset d(gaussian_matrix(30, 3, rng), gaussian_vector(30, rng), true, true);
  ModelParams p = ModelParams::zeros(d);
  p.beta(0) = 0.4;
  p.beta(2) = -1.0;
  p.theta(0) = 0.1;
  const double nll = neg_log_likelihood(d, p);
  CHECK(information_criterion(d, p, Criterion::AIC) == doctest::Approx(nll + 6.0));
  CHECK(information_criterion(d, p, Criterion::BIC) == doctest::Approx(nll + 3.0 * std::log(30.0)));
}

TEST_CASE("exact linear response recovers beta and falls back to a constant variance") {
  Matrix x(10, 2);
  x << 1, 0, 0, 1, 1, 1, 2, 1, 3, -1, 0.5, 2, -1, 0, 4, 3, 2.5, -2, -3, 1;
  const Vector y = (1.0 + 2.0 * x.col(0).array() - 3.0 * x.col(1).array()).matrix();
  const Dataset d(x, y, true, true);
  const FitResult r = fit_hippo(d, GridSpec{}, PipelineConfig{});
  CHECK(r.homoscedastic_fallback);
  CHECK(std::fabs(r.params.beta(0) - 1.0) < 1e-4);
  CHECK(std::fabs(r.params.beta(1) - 2.0) < 1e-4);
  CHECK(std::fabs(r.params.beta(2) + 3.0) < 1e-4);
  CHECK(support(r.params.theta, 1).empty());
}

TEST_CASE("degenerate residual detection and intercept-only theta") {
  const Vector y = Vector::LinSpaced(5, 1.0, 5.0);
  CHECK(degenerate_residuals(Vector::Zero(5), y));
  CHECK_FALSE(degenerate_residuals(Vector::Constant(5, 0.1), y));
  const Dataset d(Matrix::Zero(5, 2), y, true, true);
  Vector r(5);
  r << 1, -1, 2, -2, 0;
  const Vector t = intercept_only_theta(d, r);
  CHECK(t(0) == doctest::Approx(std::log(2.0)));
  CHECK(t.tail(2).isZero());
}

TEST_CASE("stage-3 weights follow the selected scheme") {
  Matrix x(2, 1);
  x << 0.0, 1.0;
  const Dataset d(x, Vector::Zero(2), true, true);
  Vector theta(2);
  theta << 0.0, 2.0;
  const Vector sq = stage3_weights(d, theta, GlsWeights::InverseVariance);
  const Vector pa = stage3_weights(d, theta, GlsWeights::InverseSd);
  CHECK(sq(1) == doctest::Approx(std::exp(-2.0)));
  CHECK(pa(1) == doctest::Approx(std::exp(-1.0)));
  CHECK(sq(0) == doctest::Approx(1.0));
}

TEST_CASE("full fit records each sweep and finds a strong heteroscedastic signal") {
  const GeneratedData g = generate_heteroscedastic_standin(400, 10, 5);
  const FitResult r = fit_hippo(g.data, GridSpec{}, PipelineConfig{});
  CHECK(r.sweeps.size() == 2);
  CHECK(r.stages.size() == 5);
  CHECK(r.stages.front().stage == "stage1");
  CHECK(r.mm_violations == 0);
  CHECK(r.params.beta == r.sweeps.back().params.beta);
  CHECK(r.criterion_value == doctest::Approx(information_criterion(g.data, r.params, Criterion::BIC)));
  const auto true_mean = support(g.truth.beta_star, 1);
  const auto found_mean = support(r.params.beta, 1);
  for (auto j : true_mean) CHECK(std::find(found_mean.begin(), found_mean.end(), j) != found_mean.end());
  CHECK_FALSE(support(r.params.theta, 1).empty());
}

TEST_CASE("HHR uses the lasso in every stage") {
  const GeneratedData g = generate_heteroscedastic_standin(200, 8, 6);
  const FitResult r = fit_hhr(g.data, GridSpec{}, PipelineConfig{});
  CHECK(r.penalty_family == PenaltyFamily::L1);
  for (const auto& st : r.stages) CHECK(st.lla_iterations == 0);
}

TEST_CASE("explicit lambda grids are used as given") {
  const GeneratedData g = generate_heteroscedastic_standin(150, 6, 7);
  GridSpec grid;
  grid.lambda_s_grid = {0.5, 0.1};
  grid.lambda_t_grid = {0.3};
  const FitResult r = fit_hippo(g.data, grid, PipelineConfig{});
  CHECK((r.lambda_s == 0.5 || r.lambda_s == 0.1));
  CHECK(r.lambda_t == 0.3);
  grid.full_product = true;
  const FitResult fp = fit_hippo(g.data, grid, PipelineConfig{});
  CHECK(fp.lambda_t == 0.3);
}

TEST_CASE("variance path is cut at the support cap") {
  const GeneratedData g = generate_example1(100, 60, 0.0, 3);
  GridSpec grid;
  grid.max_support = 2;
  grid.variance_floor = 0.0;
  const StagePath path = tune_variance_stage(g.data, Vector::Zero(60), {}, grid, PipelineConfig{});
  for (std::size_t k = 1; k < path.points.size(); ++k) CHECK(support(path.points[k].coef).size() <= 2);
}
