#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "perco/conformal.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <cmath>

using namespace perco;

namespace {

// Brute-force midpoint rule for the equilateral map, after y = t^3 on
// [0, 1/2] and the symmetry of the integrand about 1/2.
double midpoint_phi2(double w, int panels) {
  auto half_integral = [&](double upper_y) {
    const double upper = std::cbrt(upper_y);
    const double h = upper / panels;
    double s = 0.0;
    for (int k = 0; k < panels; ++k) {
      const double t = (k + 0.5) * h;
      s += 3.0 * std::pow(1.0 - t * t * t, -2.0 / 3.0);
    }
    return s * h;
  };
  const double half = half_integral(0.5);
  if (w <= 0.5) return half_integral(w) / (2.0 * half);
  return 1.0 - half_integral(1.0 - w) / (2.0 * half);
}

}  // namespace

TEST_CASE("normalization and symmetry") {
  for (const SCMap& m : {phi1_printed(), phi1_angle(), phi2()}) {
    CHECK(sc_value(m, 0.0) == 0.0);
    CHECK(sc_value(m, 1.0) == 1.0);
    CHECK(sc_inverse(m, 0.0) == 0.0);
    CHECK(sc_inverse(m, 1.0) == 1.0);
    CHECK_THROWS_AS(sc_value(m, -0.1), std::out_of_range);
    CHECK_THROWS_AS(sc_value(m, 1.1), std::out_of_range);
  }
  CHECK(std::abs(sc_value(phi2(), 0.5) - 0.5) < 1e-10);
  CHECK(std::abs(sc_inverse(phi2(), 0.5) - 0.5) < 1e-10);
  CHECK(std::abs(sc_value(phi1_angle(), 0.5) - 0.5) < 1e-10);
  CHECK_THROWS(SCMap(-1.0, 0.0));
}

TEST_CASE("agreement with the regularized incomplete beta function") {
  const SCMap maps[] = {phi1_printed(), phi1_angle(), phi2()};
  for (const SCMap& m : maps) {
    for (int k = 1; k <= 99; ++k) {
      const double w = k / 100.0;
      const double expected =
          boost::math::ibeta(1.0 + m.exponent0(), 1.0 + m.exponent1(), w);
      CHECK(std::abs(sc_value(m, w) - expected) < 1e-11);
    }
  }
}

TEST_CASE("midpoint brute force for the equilateral map") {
  const SCMap m = phi2();
  for (int k = 1; k <= 9; ++k) {
    const double w = k / 10.0;
    CHECK(std::abs(sc_value(m, w) - midpoint_phi2(w, 1000000)) < 1e-8);
  }
}

TEST_CASE("strictly increasing") {
  for (const SCMap& m : {phi1_printed(), phi1_angle(), phi2()}) {
    double prev = 0.0;
    for (int k = 1; k <= 200; ++k) {
      const double v = sc_value(m, k / 200.0);
      CHECK(v > prev);
      prev = v;
    }
  }
}

TEST_CASE("inverse round trip") {
  for (const SCMap& m : {phi1_printed(), phi1_angle(), phi2()}) {
    double worst = 0.0;
    for (int k = 1; k <= 99; ++k) {
      const double x = k / 100.0;
      worst = std::max(worst, std::abs(sc_value(m, sc_inverse(m, x)) - x));
    }
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("inverse round trip towards the ends") {
  // Near w = 1 with a negative exponent there, 1 - w falls below double
  // resolution long before X reaches 1 - 1e-6, so the bound is 1e-10 or the
  // jump of the map between w and its neighbouring doubles, whichever is larger.
  for (const SCMap& m : {phi1_printed(), phi1_angle(), phi2()}) {
    for (double e = -6.0; e <= -0.5; e += 0.25) {
      const double x = std::pow(10.0, e);
      for (const double target : {x, 1.0 - x}) {
        const double w = sc_inverse(m, target);
        const double below = sc_value(m, std::nextafter(w, 0.0));
        const double above = sc_value(m, std::nextafter(w, 1.0));
        const double spacing = std::max(above - sc_value(m, w), sc_value(m, w) - below);
        CHECK(std::abs(sc_value(m, w) - target) <= std::max(1e-10, spacing));
        if (target < 0.5) CHECK(std::abs(sc_value(m, w) - target) <= 1e-10);
      }
    }
  }
}

TEST_CASE("endpoint power law") {
  for (const SCMap& m : {phi1_printed(), phi1_angle(), phi2()}) {
    const double p = 1.0 + m.exponent0();
    const double r6 = sc_value(m, 1e-6) / std::pow(1e-6, p);
    const double r8 = sc_value(m, 1e-8) / std::pow(1e-8, p);
    CHECK(std::abs(r6 / r8 - 1.0) < 1e-5);
  }
}

TEST_CASE("tolerance refinement") {
  const SCMap fine1 = phi1_printed(1e-12), coarse1 = phi1_printed(1e-8);
  const SCMap fine2 = phi2(1e-12), coarse2 = phi2(1e-8);
  for (int k = 1; k <= 19; ++k) {
    const double X = k / 20.0;
    CHECK(std::abs(psi(fine1, fine2, X) - psi(coarse1, coarse2, X)) < 1e-8);
  }
}

TEST_CASE("comparison table") {
  std::vector<double> grid;
  for (int k = 1; k <= 19; ++k) grid.push_back(k / 20.0);
  const auto rows = cardy_comparison(grid);
  REQUIRE(rows.size() == 19);
  const CardyRow& mid = rows[9];
  CHECK(mid.X == 0.5);
  CHECK(mid.power == doctest::Approx(0.5400).epsilon(1e-4));
  CHECK(mid.psi_printed > 0.0);
  CHECK(mid.psi_angle == doctest::Approx(0.5).epsilon(1e-10));
  for (std::size_t k = 1; k < rows.size(); ++k) {
    CHECK(rows[k].psi_printed > rows[k - 1].psi_printed);
    CHECK(rows[k].psi_angle > rows[k - 1].psi_angle);
  }
  const auto edge = cardy_comparison({1e-9, 1.0 - 1e-9});
  CHECK(edge[0].psi_printed < 1e-2);
  CHECK(edge[1].psi_printed > 0.95);
  CHECK_THROWS(cardy_comparison({0.0}));
  const auto measured = cardy_comparison({0.25}, 1e-12, {0.3});
  CHECK(*measured[0].measured == 0.3);
}
