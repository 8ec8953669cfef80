#pragma once

#include <cstddef>
#include <string>

#include "hippo/model.hpp"

namespace hippo {

enum class PenaltyFamily { SCAD, L1 };

std::string to_string(PenaltyFamily f);
PenaltyFamily parse_penalty_family(const std::string& s);

struct PenaltySpec {
  PenaltyFamily family = PenaltyFamily::SCAD;
  double lambda = 0.0;
  /// SCAD shape parameter; ignored for L1.
  double a = 3.7;

  static PenaltySpec scad(double lambda, double a = 3.7) { return {PenaltyFamily::SCAD, lambda, a}; }
  static PenaltySpec l1(double lambda) { return {PenaltyFamily::L1, lambda, 3.7}; }

  void validate() const;
};

/// rho'_lambda(t) for t >= 0, with rho'(0) = lambda.
double penalty_derivative(const PenaltySpec& spec, double t);

/// rho_lambda(t) = integral of rho' over [0, t].
double penalty_value(const PenaltySpec& spec, double t);

/// sum_j rho(|v_j|) over penalized coordinates (the first `n_unpenalized` are skipped).
double penalty_sum(const PenaltySpec& spec, const Vector& v, std::size_t n_unpenalized = 0);

/// Local linear approximation weights rho'(|current_j|); zero on the leading
/// `n_unpenalized` coordinates.
Vector lla_weights(const PenaltySpec& spec, const Vector& current, std::size_t n_unpenalized = 0);

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

}  // namespace hippo
