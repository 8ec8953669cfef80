#include "hippo/penalty.hpp"

#include <cmath>

namespace hippo {

std::string to_string(PenaltyFamily f) { return f == PenaltyFamily::SCAD ? "scad" : "l1"; }

PenaltyFamily parse_penalty_family(const std::string& s) {
  if (s == "scad" || s == "SCAD") return PenaltyFamily::SCAD;
  if (s == "l1" || s == "L1") return PenaltyFamily::L1;
  throw Error("unknown penalty family '" + s + "'");
}

void PenaltySpec::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error("penalty: lambda must be finite and >= 0");
  if (family == PenaltyFamily::SCAD && !(a > 2.0)) throw Error("penalty: SCAD requires a > 2");
}

double penalty_derivative(const PenaltySpec& spec, double t) {
  if (t < 0.0) throw Error("penalty_derivative: negative argument");
  const double lam = spec.lambda;
  if (spec.family == PenaltyFamily::L1 || t <= lam) return lam;
  const double excess = spec.a * lam - t;
  return excess > 0.0 ? excess / (spec.a - 1.0) : 0.0;
}

double penalty_value(const PenaltySpec& spec, double t) {
  if (t < 0.0) throw Error("penalty_value: negative argument");
  const double lam = spec.lambda;
  if (spec.family == PenaltyFamily::L1 || t <= lam) return lam * t;
  const double a = spec.a;
  if (t <= a * lam) return (2.0 * a * lam * t - t * t - lam * lam) / (2.0 * (a - 1.0));
  return lam * lam * (a + 1.0) / 2.0;
}

double penalty_sum(const PenaltySpec& spec, const Vector& v, std::size_t n_unpenalized) {
  double s = 0.0;
  for (Eigen::Index j = static_cast<Eigen::Index>(n_unpenalized); j < v.size(); ++j) {
    s += penalty_value(spec, std::abs(v(j)));
  }
  return s;
}

Vector lla_weights(const PenaltySpec& spec, const Vector& current, std::size_t n_unpenalized) {
  Vector w(current.size());
  for (Eigen::Index j = 0; j < current.size(); ++j) {
    w(j) = static_cast<std::size_t>(j) < n_unpenalized ? 0.0
                                                       : penalty_derivative(spec, std::abs(current(j)));
  }
  return w;
}

}  // namespace hippo
