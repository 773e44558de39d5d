#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lqg/gff.hpp"
#include "lqg/gmc.hpp"
#include "lqg/params.hpp"
#include "lqg/rng.hpp"

using namespace lqg;
using gff::cplx;

TEST_CASE("green function basics") {
  CHECK(gff::green_disk(cplx(0.5, 0), cplx(0, 0)) == doctest::Approx(-std::log(0.5)));
  // boundary-boundary: -2 log|x-y|
  const cplx x = std::polar(1.0, 0.3), y = std::polar(1.0, 1.1);
  CHECK(gff::green_disk(x, y) == doctest::Approx(-2.0 * std::log(std::abs(x - y))).epsilon(1e-12));
  // symmetry
  CHECK(gff::green_disk(cplx(0.2, 0.1), cplx(-0.4, 0.3)) ==
        doctest::Approx(gff::green_disk(cplx(-0.4, 0.3), cplx(0.2, 0.1))));
}

TEST_CASE("boundary trace covariance at gap pi and friends") {
  gff::GffConfig cfg;
  cfg.res = 16;
  cfg.n_modes = 512;
  cfg.bulk_modes = 8;  // trace statistics only; keep the bulk tiny
  cfg.method = gff::SampleMethod::Modes;
  const int n = 10000;
  const double gaps[3] = {M_PI, M_PI / 2, M_PI / 3};
  double acc[3] = {0, 0, 0}, acc2[3] = {0, 0, 0};
  double mean_acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto f = gff::sample_gff(cfg, 1000 + i);
    const double v0 = f.trace(0.0);
    for (int g = 0; g < 3; ++g) {
      const double prod = v0 * f.trace(gaps[g]);
      acc[g] += prod;
      acc2[g] += prod * prod;
    }
    mean_acc += v0;
  }
  for (int g = 0; g < 3; ++g) {
    const double est = acc[g] / n;
    const double se = std::sqrt((acc2[g] / n - est * est) / n);
    const double target = -2.0 * std::log(std::abs(cplx(1, 0) - std::polar(1.0, gaps[g])));
    INFO("gap ", gaps[g], " est ", est, " target ", target, " se ", se);
    CHECK(std::abs(est - target) < std::max(3.0 * se, 0.05));
  }
  // empirical mean of the trace at a point is 0 (centred Gaussian)
  CHECK(std::abs(mean_acc / n) < 0.1);
}

TEST_CASE("trace mean over the circle vanishes by construction") {
  gff::GffConfig cfg;
  cfg.res = 16;
  cfg.n_modes = 64;
  cfg.bulk_modes = 8;
  cfg.method = gff::SampleMethod::Modes;
  const auto f = gff::sample_gff(cfg, 7);
  double mean = 0.0;
  const int nq = 4096;
  for (int k = 0; k < nq; ++k) mean += f.trace(2.0 * M_PI * k / nq);
  CHECK(std::abs(mean / nq) < 1e-10);
}

TEST_CASE("bulk covariance approaches the Green function (mode sampler)") {
  gff::GffConfig cfg;
  cfg.res = 64;
  cfg.n_modes = 128;
  cfg.bulk_modes = 128;
  cfg.method = gff::SampleMethod::Modes;
  const cplx z1(0.31, 0.02), z2(-0.12, 0.44), z3(0.33, 0.29);
  const int n = 3000;
  double c12 = 0, c13 = 0, s12 = 0, s13 = 0;
  for (int i = 0; i < n; ++i) {
    const auto f = gff::sample_gff(cfg, 555 + i);
    const double a = f.gaussian_at(z1), b = f.gaussian_at(z2), c = f.gaussian_at(z3);
    c12 += a * b;
    c13 += a * c;
    s12 += a * a * b * b;
    s13 += a * a * c * c;
  }
  const double e12 = c12 / n, e13 = c13 / n;
  const double se12 = std::sqrt((s12 / n - e12 * e12) / n);
  const double se13 = std::sqrt((s13 / n - e13 * e13) / n);
  CHECK(std::abs(e12 - gff::green_disk(z1, z2)) < std::max(4.0 * se12, 0.05));
  CHECK(std::abs(e13 - gff::green_disk(z1, z3)) < std::max(4.0 * se13, 0.05));
}

TEST_CASE("bulk covariance approaches the Green function (dense sampler)") {
  gff::GffConfig cfg;
  cfg.res = 24;
  cfg.n_modes = 96;
  cfg.method = gff::SampleMethod::Dense;
  const cplx z1(0.28, 0.05), z2(-0.15, 0.4);
  const int n = 250;
  double c12 = 0, s12 = 0;
  for (int i = 0; i < n; ++i) {
    const auto f = gff::sample_gff(cfg, 9100 + i);
    const double a = f.gaussian_at(z1), b = f.gaussian_at(z2);
    c12 += a * b;
    s12 += a * a * b * b;
  }
  const double e12 = c12 / n;
  const double se12 = std::sqrt((s12 / n - e12 * e12) / n);
  CHECK(std::abs(e12 - gff::green_disk(z1, z2)) < std::max(4.0 * se12, 0.25));
}

TEST_CASE("rotation invariance of the trace law") {
  // gap statistics at two base angles follow one law
  gff::GffConfig cfg;
  cfg.res = 16;
  cfg.n_modes = 256;
  cfg.bulk_modes = 8;
  cfg.method = gff::SampleMethod::Modes;
  const int n = 4000;
  std::vector<double> a, b;
  for (int i = 0; i < n; ++i) {
    const auto f = gff::sample_gff(cfg, 31000 + i);
    a.push_back(f.trace(0.0) - f.trace(M_PI / 3.0));
    b.push_back(f.trace(1.234) - f.trace(1.234 + M_PI / 3.0));
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    while (j < b.size() && b[j] <= a[i]) ++j;
    d = std::max(d, std::abs((i + 1.0) / a.size() - static_cast<double>(j) / b.size()));
  }
  // asymptotic 1% two-sample threshold
  const double thresh = 1.63 * std::sqrt(2.0 / n);
  CHECK(d < thresh);
}

TEST_CASE("add_insertions is exact, additive, order independent") {
  gff::GffConfig cfg;
  cfg.res = 32;
  cfg.n_modes = 32;
  cfg.method = gff::SampleMethod::Modes;
  auto f = gff::sample_gff(cfg, 3);
  const cplx z = std::polar(std::exp(-1.0), 0.7);
  const double before = f.value(z);
  auto g1 = gff::add_insertions(f, 1.0, std::nullopt, 0.0);
  CHECK(g1.value(z) - before == doctest::Approx(1.0).epsilon(1e-12));  // -log|z| = 1
  auto g0 = gff::add_insertions(f, 0.0, std::nullopt, 0.0);
  CHECK(g0.value(z) == before);
  CHECK(g0.singularities.empty());
  const cplx tip = std::polar(1.0, 2.0);
  auto ab = gff::add_insertions(gff::add_insertions(f, 0.5, std::nullopt, 0.0), 0.0, tip, 0.7);
  auto ba = gff::add_insertions(gff::add_insertions(f, 0.0, tip, 0.7), 0.5, std::nullopt, 0.0);
  CHECK(ab.value(z) == doctest::Approx(ba.value(z)).epsilon(1e-14));
}

TEST_CASE("coordinate change oracles") {
  gff::GffConfig cfg;
  cfg.res = 48;
  cfg.n_modes = 64;
  cfg.method = gff::SampleMethod::Modes;
  auto f = gff::sample_gff(cfg, 11);
  const double q = 2.1;
  const cplx z(0.3, -0.2);

  loewner::ConformalChain identity;
  CHECK(gff::coordinate_change(f, identity, z, q).value == doctest::Approx(f.value(z)));

  loewner::ConformalChain rot;
  rot.push(loewner::RotationStep{0.9});
  const auto rv = gff::coordinate_change(f, rot, z, q);
  CHECK(rv.value == doctest::Approx(f.value(z * std::polar(1.0, -0.9))).epsilon(1e-12));

  // dilation via the uniform driving measure vs the closed form
  loewner::ConformalChain dil;
  loewner::DrivingMeasure m;
  m.dt = 0.01;
  m.n_arcs = 512;
  m.rows.assign(50, Eigen::ArrayXd::Constant(512, 1.0 / 512.0));
  std::vector<loewner::MappedPoint> none;
  loewner::evolve_measure(dil, m, none);
  const double t = 0.5;
  const auto dv = gff::coordinate_change(f, dil, z, q);
  const double expect = f.value(std::exp(-t) * z) - q * t;
  CHECK(std::abs(dv.value - expect) < 1e-4);
}

TEST_CASE("sample_fixed_length pins the measured boundary mass") {
  const auto P = derive_params(std::sqrt(2.0), 1.0);
  gff::GffConfig cfg;
  cfg.res = 64;
  cfg.n_modes = 128;
  cfg.method = gff::SampleMethod::Modes;
  const double ell = 1.0;
  const auto fx = gff::sample_fixed_length(P, ell, std::polar(1.0, 0.4), cfg, 91);
  const auto bm = gmc::boundary_measure(fx.field, P.gamma);
  CHECK(bm.total() == doctest::Approx(ell).epsilon(1e-11));
  CHECK(fx.field.weight ==
        doctest::Approx(std::pow(fx.pre_shift_length,
                                 -(2.0 * P.alpha + P.beta - 2.0 * P.q) / P.gamma)));
  // rescale invariance: replacing ell by ell' shifts the field by (2/gamma) log(ell'/ell)
  const auto fx2 = gff::sample_fixed_length(P, 2.5, std::polar(1.0, 0.4), cfg, 91);
  CHECK(fx2.field.constant - fx.field.constant ==
        doctest::Approx((2.0 / P.gamma) * std::log(2.5 / ell)).epsilon(1e-12));
  CHECK(fx2.field.weight == doctest::Approx(fx.field.weight));
}
