#include <doctest.h>

#include <cmath>

#include "lqg/params.hpp"
#include "lqg/rng.hpp"

using namespace lqg;

namespace {
const double kS83 = std::sqrt(8.0 / 3.0);
}

TEST_CASE("derive_params at gamma = sqrt(8/3), eta = 0") {
  const auto p = derive_params(kS83, 0.0);
  CHECK(p.kappa == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(p.alpha == doctest::Approx(kS83).epsilon(1e-14));
  CHECK(p.beta == doctest::Approx(kS83).epsilon(1e-14));
  CHECK(p.phase == Phase::Swallowing);
}

TEST_CASE("derive_params at gamma = sqrt(2), eta = 1") {
  const double g = std::sqrt(2.0);
  const auto p = derive_params(g, 1.0);
  CHECK(p.kappa == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(p.kappa == doctest::Approx(g * g).epsilon(1e-14));
  CHECK(p.beta == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(p.phase == Phase::Dilute);
  // cross-check eta = beta^2/4 - beta Q/2 + 1 at beta = 0
  CHECK(eta_from_beta(p.beta, p.q) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("derive_params at gamma = 1, eta = -5/16") {
  const auto p = derive_params(1.0, -5.0 / 16.0);
  CHECK(p.kappa == doctest::Approx(16.0).epsilon(1e-14));
  CHECK(p.alpha == doctest::Approx(2.25).epsilon(1e-14));
  CHECK(p.beta == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(p.phase == Phase::SpaceFilling);
  CHECK(eta_from_beta(1.5, 2.5) == doctest::Approx(-5.0 / 16.0).epsilon(1e-14));
}

TEST_CASE("eta_from_beta basics") {
  CHECK(eta_from_beta(0.0, 3.7) == 1.0);
  // beta = gamma - 2/gamma on the upper curve reproduces 3/gamma^2 - 1/2
  for (double g : {0.9, 1.2, 1.7, 1.95}) {
    const double q = 0.5 * g + 2.0 / g;
    const double b = g - 2.0 / g;
    CHECK(eta_from_beta(b, q) == doctest::Approx(3.0 / (g * g) - 0.5).epsilon(1e-12));
  }
}

TEST_CASE("rejections") {
  CHECK_THROWS_AS(derive_params(1.4, eta_lower_branch(1.4)), OutOfRange);  // beta >= 2 gap
  CHECK_THROWS_AS(derive_params(std::sqrt(2.0), eta_lower_branch(std::sqrt(2.0))), OutOfRange);
  CHECK_THROWS_AS(derive_params(0.5, eta_upper_branch(0.5)), OutOfRange);  // beta <= -2
  CHECK_THROWS_AS(derive_params(2.0, eta_upper_branch(2.0)), OutOfRange);
  CHECK_THROWS_AS(derive_params(1.0, 0.123), OutOfRange);  // off both curves
}

TEST_CASE("property: invariants over sampled admissible pairs") {
  Rng rng(20240901ULL);
  const double s3m1 = std::sqrt(3.0) - 1.0;
  int checked = 0;
  for (int i = 0; i < 10000; ++i) {
    const bool upper = rng.uniform() < 0.5;
    double g, eta;
    if (upper) {
      g = rng.uniform(s3m1 + 1e-9, 2.0 - 1e-9);
      eta = eta_upper_branch(g);
    } else {
      if (rng.uniform() < 0.5) g = rng.uniform(1e-3, 4.0 / 3.0 - 1e-9);
      else g = rng.uniform(2.0 * std::sqrt(3.0) - 2.0 + 1e-9, 2.0 - 1e-9);
      eta = eta_lower_branch(g);
    }
    const auto p = derive_params(g, eta);
    ++checked;
    const bool kappa_member = std::abs(p.kappa - g * g) <= 1e-12 * std::max(1.0, p.kappa) ||
                              std::abs(p.kappa - 16.0 / (g * g)) <= 1e-12 * std::max(1.0, p.kappa);
    REQUIRE(kappa_member);
    // 6/kappa = 2 eta + 1, the cancellation-stable rendering of the identity
    REQUIRE(std::abs(6.0 / p.kappa - (2.0 * p.eta + 1.0)) <=
            1e-12 * std::max(1.0, 6.0 / p.kappa));
    REQUIRE(std::abs(p.eta - eta_from_beta(p.beta, p.q)) <= 1e-12);
    REQUIRE(p.beta > -2.0);
    REQUIRE(p.beta < 2.0);
    // branch-consistent: recomputing kappa from the returned eta reproduces it
    const auto p2 = derive_params(p.gamma, p.eta);
    REQUIRE(p2.kappa == p.kappa);
    REQUIRE(p2.phase == p.phase);
  }
  CHECK(checked == 10000);
}
