#include "hippo/model.hpp"

#include <algorithm>
#include <cmath>

namespace hippo {

namespace {

Matrix with_intercept(const Matrix& x, bool intercept) {
  if (!intercept) return x;
  Matrix out(x.rows(), x.cols() + 1);
  out.col(0).setOnes();
  out.rightCols(x.cols()) = x;
  return out;
}

}  // namespace

Dataset::Dataset(Matrix x, Vector y, bool has_mean_intercept, bool has_var_intercept)
    : x_(std::move(x)),
      y_(std::move(y)),
      mean_intercept_(has_mean_intercept),
      var_intercept_(has_var_intercept) {
  if (x_.rows() != y_.size()) {
    throw DimensionError("dataset: x has " + std::to_string(x_.rows()) +
                         " rows but y has length " + std::to_string(y_.size()));
  }
  if (x_.rows() < 1 || x_.cols() < 1) throw DimensionError("dataset: need n >= 1 and p >= 1");
  if (!x_.allFinite() || !y_.allFinite()) throw Error("dataset: non-finite entries");
  mean_design_ = with_intercept(x_, mean_intercept_);
  var_design_ = with_intercept(x_, var_intercept_);
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Matrix xs(static_cast<Eigen::Index>(rows.size()), x_.cols());
  Vector ys(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    if (r >= x_.rows()) throw DimensionError("dataset: row index out of range");
    xs.row(static_cast<Eigen::Index>(i)) = x_.row(r);
    ys(static_cast<Eigen::Index>(i)) = y_(r);
  }
  return Dataset(std::move(xs), std::move(ys), mean_intercept_, var_intercept_);
}

ModelParams ModelParams::zeros(const Dataset& d) {
  return {Vector::Zero(static_cast<Eigen::Index>(d.mean_dim())),
          Vector::Zero(static_cast<Eigen::Index>(d.var_dim()))};
}

std::vector<std::size_t> support(const Vector& v, std::size_t offset) {
  std::vector<std::size_t> s;
  for (Eigen::Index j = static_cast<Eigen::Index>(offset); j < v.size(); ++j) {
    if (v(j) != 0.0) s.push_back(static_cast<std::size_t>(j));
  }
  return s;
}

int degrees_of_freedom(const ModelParams& p) {
  return static_cast<int>(support(p.beta).size() + support(p.theta).size());
}

void check_dimensions(const Dataset& d, const ModelParams& p) {
  if (static_cast<std::size_t>(p.beta.size()) != d.mean_dim()) {
    throw DimensionError("beta has length " + std::to_string(p.beta.size()) + ", expected " +
                         std::to_string(d.mean_dim()));
  }
  if (static_cast<std::size_t>(p.theta.size()) != d.var_dim()) {
    throw DimensionError("theta has length " + std::to_string(p.theta.size()) + ", expected " +
                         std::to_string(d.var_dim()));
  }
}

Vector predict_mean(const Dataset& d, const ModelParams& p) {
  check_dimensions(d, p);
  return d.mean_design() * p.beta;
}

Vector variance_linear_predictor(const Dataset& d, const ModelParams& p) {
  check_dimensions(d, p);
  Vector eta = d.variance_design() * p.theta;
  return eta.cwiseMax(-kLinearPredictorClip).cwiseMin(kLinearPredictorClip);
}

Vector variance_scale(const Dataset& d, const ModelParams& p) {
  return (variance_linear_predictor(d, p).array() / 2.0).exp().matrix();
}

Vector residuals(const Dataset& d, const ModelParams& p) { return d.y() - predict_mean(d, p); }

double neg_log_likelihood(const Dataset& d, const ModelParams& p) {
  const Vector eta = variance_linear_predictor(d, p);
  const Vector r = residuals(d, p);
  return (eta.array() + r.array().square() * (-eta.array()).exp()).sum();
}

}  // namespace hippo
