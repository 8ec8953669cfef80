#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hippo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Raised when the squared residuals carry no information for the variance
/// model (all residuals are zero up to rounding).
class DegenerateResiduals : public Error {
 public:
  DegenerateResiduals() : Error("degenerate residuals") {}
};

/// Linear predictors x'theta are clipped to this range before exponentiation.
inline constexpr double kLinearPredictorClip = 30.0;

/// A regression instance. Intercepts are not part of `x`; when flagged, a
/// leading column of ones is prepended to the mean and/or variance design.
class Dataset {
 public:
  Dataset(Matrix x, Vector y, bool has_mean_intercept = false,
          bool has_var_intercept = false);

  const Matrix& x() const { return x_; }
  const Vector& y() const { return y_; }
  std::size_t n() const { return static_cast<std::size_t>(x_.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(x_.cols()); }
  bool has_mean_intercept() const { return mean_intercept_; }
  bool has_var_intercept() const { return var_intercept_; }

  /// Design used for beta: [1, x] or x.
  const Matrix& mean_design() const { return mean_design_; }
  /// Design used for theta: [1, x] or x.
  const Matrix& variance_design() const { return var_design_; }

  std::size_t mean_dim() const { return p() + (mean_intercept_ ? 1 : 0); }
  std::size_t var_dim() const { return p() + (var_intercept_ ? 1 : 0); }

  /// Rows selected by index, keeping the intercept flags.
  Dataset subset(const std::vector<std::size_t>& rows) const;

 private:
  Matrix x_;
  Vector y_;
  bool mean_intercept_;
  bool var_intercept_;
  Matrix mean_design_;
  Matrix var_design_;
};

/// Mean coefficients beta and log-variance coefficients theta. Intercepts, when
/// present, occupy index 0.
struct ModelParams {
  Vector beta;
  Vector theta;

  static ModelParams zeros(const Dataset& d);
};

/// Indices j with v_j != 0, starting at `offset` (use 1 to skip an intercept).
std::vector<std::size_t> support(const Vector& v, std::size_t offset = 0);

/// |supp(beta)| + |supp(theta)|, intercepts included.
int degrees_of_freedom(const ModelParams& p);

void check_dimensions(const Dataset& d, const ModelParams& p);

Vector predict_mean(const Dataset& d, const ModelParams& p);

/// Clipped linear predictor x_i'theta.
Vector variance_linear_predictor(const Dataset& d, const ModelParams& p);

/// sigma_i = exp(x_i'theta / 2).
Vector variance_scale(const Dataset& d, const ModelParams& p);

Vector residuals(const Dataset& d, const ModelParams& p);

/// sum_i [x_i'theta + (y_i - x_i'beta)^2 exp(-x_i'theta)], i.e. twice the
/// Gaussian negative log-likelihood without the n log(2 pi) constant.
double neg_log_likelihood(const Dataset& d, const ModelParams& p);

}  // namespace hippo
