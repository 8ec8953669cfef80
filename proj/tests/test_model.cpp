#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "hippo/model.hpp"

using namespace hippo;

TEST_CASE("dataset prepends intercept columns only to the requested design") {
  Matrix x(3, 2);
  x << 1, 2, 3, 4, 5, 6;
  const Dataset d(x, Vector::Constant(3, 1.0), true, false);
  CHECK(d.mean_dim() == 3);
  CHECK(d.var_dim() == 2);
  CHECK(d.mean_design().col(0).isApproxToConstant(1.0));
  CHECK(d.mean_design().rightCols(2) == x);
  CHECK(d.variance_design() == x);

  const Dataset s = d.subset({2, 0});
  CHECK(s.n() == 2);
  CHECK(s.x()(0, 1) == 6.0);
  CHECK(s.has_mean_intercept());
  CHECK_FALSE(s.has_var_intercept());
}

TEST_CASE("dataset rejects mismatched or empty inputs") {
  CHECK_THROWS_AS(Dataset(Matrix::Zero(3, 2), Vector::Zero(4)), DimensionError);
  CHECK_THROWS_AS(Dataset(Matrix::Zero(0, 2), Vector::Zero(0)), DimensionError);
}

TEST_CASE("negative log-likelihood matches a hand sum") {
  Matrix x(2, 1);
  x << 1.0, -2.0;
  Vector y(2);
  y << 3.0, 1.0;
  const Dataset d(x, y, true, true);
  ModelParams p;
  p.beta = Vector(2);
  p.beta << 1.0, 0.5;
  p.theta = Vector(2);
  p.theta << 0.2, 0.3;
  // row 1: r = 3 - 1.5 = 1.5, u = 0.5; row 2: r = 1 - 0 = 1, u = -0.4
  const double expected = 0.5 + 2.25 * std::exp(-0.5) + (-0.4) + 1.0 * std::exp(0.4);
  CHECK(neg_log_likelihood(d, p) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(variance_scale(d, p)(0) == doctest::Approx(std::exp(0.25)));
}

TEST_CASE("variance linear predictor is clipped") {
  Matrix x(1, 1);
  x << 100.0;
  const Dataset d(x, Vector::Ones(1));
  ModelParams p{Vector::Zero(1), Vector::Ones(1)};
  CHECK(variance_linear_predictor(d, p)(0) == kLinearPredictorClip);
  CHECK(std::isfinite(neg_log_likelihood(d, p)));
}

TEST_CASE("support and degrees of freedom count nonzeros, with intercepts in df") {
  Vector b(4);
  b << 1.0, 0.0, -2.0, 0.0;
  Vector t(3);
  t << 0.5, 0.0, 0.0;
  CHECK(support(b) == std::vector<std::size_t>{0, 2});
  CHECK(support(b, 1) == std::vector<std::size_t>{2});
  CHECK(degrees_of_freedom({b, t}) == 3);
}

TEST_CASE("parameter dimension checks") {
  const Dataset d(Matrix::Zero(3, 2), Vector::Zero(3), true, true);
  CHECK_NOTHROW(check_dimensions(d, ModelParams::zeros(d)));
  CHECK_THROWS_AS(check_dimensions(d, {Vector::Zero(2), Vector::Zero(3)}), DimensionError);
}
