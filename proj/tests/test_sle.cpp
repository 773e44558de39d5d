#include <doctest.h>

#include <cmath>

#include "lqg/sle.hpp"

using namespace lqg;

TEST_CASE("kappa = 0 driving is constant") {
  const auto p = sle::sample_driving(0.0, 0.1, 1e-3, 1, 0.7);
  for (double a : p.angles) CHECK(a == 0.7);
}

TEST_CASE("driving increments over disjoint intervals are uncorrelated") {
  const int n = 1000;
  double acc = 0.0, acc2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto p = sle::sample_driving(3.0, 0.2, 1e-3, 400 + i);
    const std::size_t third = p.angles.size() / 3;
    const double d1 = p.angles[third] - p.angles[0];
    const double d2 = p.angles[2 * third] - p.angles[third];
    acc += d1 * d2;
    acc2 += d1 * d1 * d2 * d2;
  }
  const double mean = acc / n;
  const double se = std::sqrt((acc2 / n - mean * mean) / n);
  CHECK(std::abs(mean) < 3.0 * se);
}

TEST_CASE("simple clock: increments, sides, reconstruction") {
  sle::QuantumClock c(Phase::Dilute);
  CHECK(c.tick_simple(1.0, 1.0, 0.5, 0.5) == 0.0);
  const double inc = c.tick_simple(1.0, 1.2, 0.09, 0.11);
  CHECK(inc == doctest::Approx(0.1));
  CHECK(c.side_discrepancy() == doctest::Approx(0.2));
  CHECK(c.accumulated() == doctest::Approx(0.1));
  // L_s = ell + 2s reconstruction: accumulate and compare
  double L = 1.2;
  for (int i = 0; i < 50; ++i) {
    const double Lnew = L + 0.01 * (i % 3 + 1);
    c.tick_simple(L, Lnew, 1.0, 1.0);
    L = Lnew;
  }
  CHECK(L - 1.0 == doctest::Approx(2.0 * c.accumulated()).epsilon(1e-12));
  CHECK_THROWS_AS(c.tick_simple(2.0, 1.0, 1.0, 1.0), sle::NegativeIncrement);
}

TEST_CASE("area clock: additive, zero on empty") {
  sle::QuantumClock c(Phase::SpaceFilling);
  CHECK(c.tick_area(0.0) == 0.0);
  c.tick_area(0.25);
  c.tick_area(0.5);
  CHECK(c.accumulated() == doctest::Approx(0.75));
  CHECK_THROWS(c.tick_simple(1, 2, 1, 1));
}

TEST_CASE("swallow clock: counting window and c0 linearity") {
  const double gamma = std::sqrt(3.0);
  const double eps = 0.05;
  sle::QuantumClock c1(Phase::Swallowing, 1.0, eps);
  sle::QuantumClock c2(Phase::Swallowing, 2.0, eps);
  CHECK(c1.tick_swallow({}, gamma) == 0.0);
  // jumps: one inside [eps, 2 eps), one below, one above
  const std::vector<double> jumps = {0.06, 0.01, 0.2};
  const double i1 = c1.tick_swallow(jumps, gamma);
  const double i2 = c2.tick_swallow(jumps, gamma);
  CHECK(i1 == doctest::Approx(std::pow(eps, 4.0 / (gamma * gamma))));
  CHECK(i2 == doctest::Approx(2.0 * i1));  // linear time change in c0
  // additivity
  const double before = c1.accumulated();
  c1.tick_swallow({0.07}, gamma);
  CHECK(c1.accumulated() == doctest::Approx(before + i1));
}
