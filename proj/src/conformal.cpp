#include "perco/conformal.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace perco {

namespace {

// Substitution power for an endpoint factor u^e: q = 1/(1+e) turns
// u^e du into a constant for e < 0; q = 4 makes it at least C^3 otherwise.
double substitution_power(double e) { return e < 0.0 ? 1.0 / (1.0 + e) : 4.0; }

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

double integrate(double q, double e_near, double e_far, double upper, double rel_tol) {
  if (upper <= 0.0) return 0.0;
  const double power = q * (1.0 + e_near) - 1.0;
  auto f = [&](double u) {
    const double uq = std::pow(u, q);
    const double near = power == 0.0 ? 1.0 : std::pow(u, power);
    return q * near * std::pow(1.0 - uq, e_far);
  };
  // The smoothed integrand is bounded and the raw totals are O(1), so the
  // target is absolute: Kronrod error estimates have a round-off floor that a
  // relative target on a short interval never reaches.
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double rough = std::abs(GK::integrate(f, 0.0, upper, 0));
  const double target = rel_tol / std::min(std::max(rough, 1e-300), 1.0);
  double error = 0.0;
  const double value = GK::integrate(f, 0.0, upper, 12, target, &error);
  if (!(error <= rel_tol * 10.0))
    throw std::runtime_error("Schwarz-Christoffel quadrature did not converge: error " +
                             sci(error) + " against " + sci(rel_tol));
  return value;
}

}  // namespace

SCMap::SCMap(double exponent0, double exponent1, double tolerance)
    : a_(exponent0), b_(exponent1), tol_(tolerance) {
  if (!(a_ > -1.0 && a_ <= 1.0 && b_ > -1.0 && b_ <= 1.0))
    throw std::invalid_argument("endpoint exponents must lie in (-1, 1]");
  if (!(tolerance > 0.0 && tolerance < 1e-3))
    throw std::invalid_argument("quadrature tolerance must lie in (0, 1e-3)");
  q0_ = substitution_power(a_);
  q1_ = substitution_power(b_);
  t_half_ = std::pow(0.5, 1.0 / q0_);
  s_half_ = std::pow(0.5, 1.0 / q1_);
  total_ = left(t_half_) + right(s_half_);
}

double SCMap::left(double t) const {
  return integrate(q0_, a_, b_, t, std::max(tol_ * 0.05, 1e-15));
}

double SCMap::right(double s) const {
  return integrate(q1_, b_, a_, s, std::max(tol_ * 0.05, 1e-15));
}

double SCMap::value(double w) const {
  if (!(w >= 0.0 && w <= 1.0))
    throw std::out_of_range("map argument must lie in [0, 1], got " + std::to_string(w));
  if (w == 0.0) return 0.0;
  if (w == 1.0) return 1.0;
  if (w <= 0.5) return left(std::pow(w, 1.0 / q0_)) / total_;
  return 1.0 - right(std::pow(1.0 - w, 1.0 / q1_)) / total_;
}

double SCMap::derivative(double w) const {
  if (!(w > 0.0 && w < 1.0)) throw std::out_of_range("derivative needs w in (0, 1)");
  return std::pow(w, a_) * std::pow(1.0 - w, b_) / total_;
}

double SCMap::inverse(double x) const {
  if (!(x >= 0.0 && x <= 1.0))
    throw std::out_of_range("map value must lie in [0, 1], got " + std::to_string(x));
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  // Solve in the substituted variable, where the map is smooth and close to
  // linear near the endpoint.
  const bool lower = x <= left(t_half_) / total_;
  const double q = lower ? q0_ : q1_;
  const double e_near = lower ? a_ : b_;
  const double e_far = lower ? b_ : a_;
  const double target = lower ? x : 1.0 - x;
  auto g = [&](double u) { return (lower ? left(u) : right(u)) / total_ - target; };
  auto dg = [&](double u) {
    const double power = q * (1.0 + e_near) - 1.0;
    return q * (power == 0.0 ? 1.0 : std::pow(u, power)) * std::pow(1.0 - std::pow(u, q), e_far) /
           total_;
  };
  double lo = 0.0, hi = lower ? t_half_ : s_half_;
  double u = 0.5 * (lo + hi);
  while (hi - lo > 1e-6 * (lower ? t_half_ : s_half_)) {
    u = 0.5 * (lo + hi);
    (g(u) < 0.0 ? lo : hi) = u;
  }
  u = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double r = g(u);
    if (std::abs(r) <= 0.25 * tol_) break;
    (r < 0.0 ? lo : hi) = u;
    double next = u - r / dg(u);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == u) break;
    u = next;
  }
  return lower ? std::pow(u, q) : 1.0 - std::pow(u, q);
}

SCMap phi1_printed(double tolerance) { return SCMap(-0.75, 0.75, tolerance); }
SCMap phi1_angle(double tolerance) { return SCMap(-0.75, -0.75, tolerance); }
SCMap phi2(double tolerance) { return SCMap(-2.0 / 3.0, -2.0 / 3.0, tolerance); }

double sc_value(const SCMap& map, double w) { return map.value(w); }
double sc_inverse(const SCMap& map, double x) { return map.inverse(x); }

double psi(const SCMap& phi1, const SCMap& phi2, double X) {
  return phi2.value(phi1.inverse(X));
}

std::vector<CardyRow> cardy_comparison(const std::vector<double>& grid, double tolerance,
                                       const std::vector<std::optional<double>>& measured) {
  if (!measured.empty() && measured.size() != grid.size())
    throw std::invalid_argument("measured values must match the grid");
  const SCMap printed = phi1_printed(tolerance);
  const SCMap angle = phi1_angle(tolerance);
  const SCMap equilateral = phi2(tolerance);
  std::vector<CardyRow> rows;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double X = grid[k];
    if (!(X > 0.0 && X < 1.0)) throw std::invalid_argument("comparison grid must lie in (0, 1)");
    CardyRow row;
    row.X = X;
    row.psi_printed = psi(printed, equilateral, X);
    row.psi_angle = psi(angle, equilateral, X);
    row.power = std::pow(X, 8.0 / 9.0);
    if (!measured.empty()) row.measured = measured[k];
    rows.push_back(row);
  }
  return rows;
}

}  // namespace perco
