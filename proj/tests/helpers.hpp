#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>

#include "hippo/model.hpp"
#include "hippo/random.hpp"

namespace testing {

using hippo::Matrix;
using hippo::Vector;

inline Matrix gaussian_matrix(Eigen::Index n, Eigen::Index p, hippo::Rng& rng) {
  Matrix x(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = rng.normal();
  return x;
}

inline Vector gaussian_vector(Eigen::Index n, hippo::Rng& rng) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

// Minimizes a convex function of two variables by nested grid search: each
// round scans a 41 x 41 grid and recenters on the best cell with a 10x finer step.
inline std::pair<double, double> grid_minimize_2d(const std::function<double(double, double)>& f, double cx,
                                                  double cy, double half_width, int rounds) {
  double step = half_width / 20.0;
  for (int r = 0; r < rounds; ++r) {
    double best = f(cx, cy), bx = cx, by = cy;
    for (int i = -20; i <= 20; ++i) {
      for (int j = -20; j <= 20; ++j) {
        const double x = cx + i * step, y = cy + j * step;
        const double v = f(x, y);
        if (v < best) {
          best = v;
          bx = x;
          by = y;
        }
      }
    }
    cx = bx;
    cy = by;
    step /= 10.0;
  }
  return {cx, cy};
}

// Regularized incomplete beta I_x(a, b) by the Lentz continued fraction.
inline double incomplete_beta(double x, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - incomplete_beta(1.0 - x, b, a);
  const double front =
      std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x)) / a;
  const double tiny = 1e-300;
  double f = 1.0, c = 1.0, d = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const int m = i / 2;
    double num;
    if (i == 0) {
      num = 1.0;
    } else if (i % 2 == 0) {
      num = (m * (b - m) * x) / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));
    } else {
      num = -((a + m) * (a + b + m) * x) / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
    }
    d = 1.0 + num * d;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    c = 1.0 + num / c;
    if (std::fabs(c) < tiny) c = tiny;
    const double cd = c * d;
    f *= cd;
    if (std::fabs(1.0 - cd) < 1e-15) break;
  }
  return front * (f - 1.0);
}

inline double f_cdf_oracle(double f, double d1, double d2) {
  return incomplete_beta(d1 * f / (d1 * f + d2), d1 / 2.0, d2 / 2.0);
}

// KKT residual of min (1/n) sum w (y - x b)^2 + 2 sum c |b|, from first principles.
inline double mean_kkt_oracle(const Matrix& x, const Vector& y, const Vector& w, const Vector& c, const Vector& b) {
  const double n = static_cast<double>(x.rows());
  const Vector g = -(2.0 / n) * x.transpose() * (w.array() * (y - x * b).array()).matrix();
  double worst = 0.0;
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    const double r = b(j) != 0.0 ? std::fabs(g(j) + 2.0 * c(j) * (b(j) > 0 ? 1.0 : -1.0))
                                 : std::max(0.0, std::fabs(g(j)) - 2.0 * c(j));
    worst = std::max(worst, r);
  }
  return worst;
}

// Same for min (1/n) sum [u + e exp(-u)] + 4 sum c |t|, u = x t.
inline double variance_kkt_oracle(const Matrix& x, const Vector& e, const Vector& c, const Vector& t) {
  const double n = static_cast<double>(x.rows());
  const Vector u = x * t;
  const Vector g = (1.0 / n) * x.transpose() * (1.0 - e.array() * (-u.array()).exp()).matrix();
  double worst = 0.0;
  for (Eigen::Index j = 0; j < t.size(); ++j) {
    const double r = t(j) != 0.0 ? std::fabs(g(j) + 4.0 * c(j) * (t(j) > 0 ? 1.0 : -1.0))
                                 : std::max(0.0, std::fabs(g(j)) - 4.0 * c(j));
    worst = std::max(worst, r);
  }
  return worst;
}

inline double variance_objective_oracle(const Matrix& x, const Vector& e, const Vector& c, const Vector& t) {
  const Vector u = x * t;
  return (u.array() + e.array() * (-u.array()).exp()).mean() + 4.0 * (c.array() * t.array().abs()).sum();
}

}  // namespace testing
