#pragma once

#include <optional>
#include <string>
#include <vector>

namespace perco {

/// Normalized Schwarz–Christoffel boundary map of the real segment [0, 1]:
///   value(w) = ∫_0^w y^a (1-y)^b dy / ∫_0^1 y^a (1-y)^b dy,   a, b > -1.
/// Each half of [0, 1] is integrated after the substitution y = t^q
/// (1 - y = s^q near 1) that removes the endpoint power.
class SCMap {
 public:
  SCMap(double exponent0, double exponent1, double tolerance = 1e-12);

  double exponent0() const { return a_; }
  double exponent1() const { return b_; }
  double tolerance() const { return tol_; }
  /// Raw integral over [0, 1]; value() divides by it.
  double total() const { return total_; }

  double value(double w) const;
  /// w with |value(w) - x| <= tolerance.
  double inverse(double x) const;
  /// d value / dw.
  double derivative(double w) const;

 private:
  double left(double t) const;   // raw integral over y in [0, t^q0], t^q0 <= 1/2
  double right(double s) const;  // raw integral over y in [1 - s^q1, 1], s^q1 <= 1/2
  double q0_, q1_;
  double a_, b_, tol_;
  double t_half_, s_half_, total_;
};

/// Map of the right isosceles triangle with the exponents printed for it:
/// y^(-3/4) (1-y)^(3/4).
SCMap phi1_printed(double tolerance = 1e-12);
/// Same triangle with exponents from its angles (pi/4, pi/4, pi/2):
/// y^(-3/4) (1-y)^(-3/4).
SCMap phi1_angle(double tolerance = 1e-12);
/// Equilateral triangle: y^(-2/3) (1-y)^(-2/3).
SCMap phi2(double tolerance = 1e-12);

double sc_value(const SCMap& map, double w);
double sc_inverse(const SCMap& map, double x);

/// psi(X) = phi2(phi1^-1(X)).
double psi(const SCMap& phi1, const SCMap& phi2, double X);

struct CardyRow {
  double X = 0.0;
  double psi_printed = 0.0;
  double psi_angle = 0.0;
  /// X^(8/9)
  double power = 0.0;
  std::optional<double> measured;
};

/// One row per grid point in (0, 1); measured[k], when given, is an
/// estimate of the crossing probability at grid[k].
std::vector<CardyRow> cardy_comparison(const std::vector<double>& grid, double tolerance = 1e-12,
                                       const std::vector<std::optional<double>>& measured = {});

}  // namespace perco
