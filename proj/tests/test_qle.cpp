#include <doctest.h>

#include <cmath>

#include "lqg/gmc.hpp"
#include "lqg/qle.hpp"
#include "lqg/sle.hpp"

using namespace lqg;
using gff::cplx;

namespace {

qle::RunConfig small_config(double gamma, double eta, std::uint64_t seed) {
  qle::RunConfig cfg;
  cfg.params = derive_params(gamma, eta);
  cfg.grid_resolution = 96;
  cfg.n_modes = 128;
  cfg.dt = 2e-4;
  cfg.seed = seed;
  cfg.n_arcs_chain = 512;
  cfg.quad_chain = 8;
  return cfg;
}

}  // namespace

TEST_CASE("engine at time zero matches direct evaluation") {
  auto cfg = small_config(std::sqrt(2.0), 1.0, 5);
  gff::GffConfig gcfg;
  gcfg.res = cfg.grid_resolution;
  gcfg.n_modes = cfg.n_modes;
  gcfg.method = gff::SampleMethod::Modes;
  auto field = gff::sample_gff(gcfg, 42);
  auto area = gmc::area_measure(field, cfg.params.gamma, cfg.eps());
  qle::FrontierEngine eng(field, area, cfg);

  // identity pullback
  for (double th : {0.1, 1.3, 2.9, 4.4}) {
    const cplx w = std::polar(1.0 - 0.7 * cfg.eps(), th);
    const auto ev = eng.eval_inverse(w);
    REQUIRE(ev.ok);
    CHECK(std::abs(ev.z - w) < 2e-4);
    CHECK(std::abs(ev.dz - 1.0) < 2e-3);
  }

  const auto lm = eng.measure_length(cfg.n_arcs_chain, cfg.quad_chain);
  const auto direct = gmc::boundary_measure(field, cfg.params.gamma, cfg.eps(), cfg.n_arcs_chain);
  CHECK(std::abs(lm.total / direct.total() - 1.0) < 0.02);
}

TEST_CASE("engine measurements agree with exact chain inversion") {
  auto cfg = small_config(std::sqrt(2.0), 1.0, 6);
  gff::GffConfig gcfg;
  gcfg.res = cfg.grid_resolution;
  gcfg.n_modes = cfg.n_modes;
  gcfg.method = gff::SampleMethod::Modes;
  auto field = gff::sample_gff(gcfg, 43);
  field = gff::add_insertions(std::move(field), cfg.params.alpha, std::polar(1.0, 0.3),
                              cfg.params.beta);
  auto area = gmc::area_measure(field, cfg.params.gamma, cfg.eps());
  qle::FrontierEngine eng(field, area, cfg);

  const auto drive = sle::sample_driving(cfg.params.kappa, 0.06, cfg.dt, 77, 0.3);
  loewner::ConformalChain chain;
  std::vector<loewner::MappedPoint> none;
  for (double th : drive.angles) {
    eng.step(th);
    loewner::DrivingPath one;
    one.dt = cfg.dt;
    one.angles = {th};
    loewner::evolve_point(chain, one, none);
  }
  CHECK(eng.capacity() == doctest::Approx(chain.total_capacity()));

  // preimages near the circle agree with exact inversion
  int compared = 0;
  for (double th : {0.9, 2.0, 3.1, 4.2, 5.3}) {
    const cplx w = std::polar(1.0 - 0.8 * cfg.eps(), th);
    const auto ev = eng.eval_inverse(w);
    const auto exact = chain.inverse(w);
    if (!ev.ok) continue;
    ++compared;
    CHECK(std::abs(ev.z - exact.z) < 5e-3);
    CHECK(std::abs(std::abs(ev.dz) / std::abs(exact.deriv) - 1.0) < 0.08);
  }
  CHECK(compared >= 4);

  const auto lm = eng.measure_length(cfg.n_arcs_chain, cfg.quad_chain);
  const auto ref = qle::boundary_length_at(field, chain, cfg.params.gamma, cfg.params.q,
                                           cfg.eps(), cfg.n_arcs_chain, 8);
  INFO("engine ", lm.total, " exact ", ref.value);
  CHECK(std::abs(lm.total / ref.value - 1.0) < 0.05);
}

TEST_CASE("dilute run: trace invariants") {
  auto cfg = small_config(std::sqrt(2.0), 1.0, 17);
  cfg.delta = 0.05;
  cfg.s_stop = 0.12;
  cfg.capacity_budget = 3.0;
  const auto res = qle::run_delta_qle(cfg);
  const auto& tr = res.trace;
  REQUIRE(tr.samples.size() >= 2);
  CHECK(tr.samples.front().L == 1.0);
  CHECK(tr.samples.front().s == 0.0);
  for (std::size_t i = 1; i < tr.samples.size(); ++i) {
    CHECK(tr.samples[i].s > tr.samples[i - 1].s);
    CHECK(tr.samples[i].t > tr.samples[i - 1].t);
    CHECK(tr.samples[i].L >= 0.0);
    // the simple clock makes L = 1 + 2s a bookkeeping identity
    CHECK(std::abs(tr.samples[i].L - 1.0 - 2.0 * tr.samples[i].s) < 1e-9);
  }
  CHECK(tr.weight > 0.0);
  CHECK(res.reached_stop);
  // dilute: no sizable pockets
  for (const auto& r : tr.swallow_records) CHECK(r.terminal == false);
  CHECK((tr.samples.back().A_pockets <= 2.0 * tr.mean_cell_mass));
}

TEST_CASE("runs are deterministic given config and seed") {
  auto cfg = small_config(std::sqrt(2.0), 1.0, 29);
  cfg.delta = 0.05;
  cfg.s_stop = 0.06;
  cfg.capacity_budget = 2.0;
  const auto a = qle::run_delta_qle(cfg);
  const auto b = qle::run_delta_qle(cfg);
  REQUIRE(a.trace.samples.size() == b.trace.samples.size());
  for (std::size_t i = 0; i < a.trace.samples.size(); ++i) {
    CHECK(a.trace.samples[i].s == b.trace.samples[i].s);
    CHECK(a.trace.samples[i].L == b.trace.samples[i].L);
    CHECK(a.trace.samples[i].t == b.trace.samples[i].t);
  }
  CHECK(a.area_b_half == b.area_b_half);
  CHECK(a.L_stop == b.L_stop);
}

TEST_CASE("boundary_length_at oracles: identity, rotation, dilation") {
  gff::GffConfig gcfg;
  gcfg.res = 64;
  gcfg.n_modes = 64;
  gcfg.method = gff::SampleMethod::Modes;
  const auto field = gff::sample_gff(gcfg, 404);
  const double gamma = 1.1, q = 0.5 * gamma + 2.0 / gamma;
  const double eps = 3.0 * field.cell_size();

  loewner::ConformalChain id;
  const auto base = qle::boundary_length_at(field, id, gamma, q, eps, 256, 8);
  const auto direct = gmc::boundary_measure(field, gamma, eps, 256);
  CHECK(std::abs(base.value / direct.total() - 1.0) < 0.02);

  loewner::ConformalChain rot;
  rot.push(loewner::RotationStep{1.2});
  const auto rv = qle::boundary_length_at(field, rot, gamma, q, eps, 256, 8);
  CHECK(rv.value == doctest::Approx(base.value).epsilon(1e-6));

  // dilation of the zero field: closed-form Jacobian factor
  gff::FieldSample zero;
  zero.res = 64;
  zero.n_modes = 8;
  zero.grid.setZero(64, 64);
  zero.mode_a = Eigen::ArrayXd::Zero(8);
  zero.mode_b = Eigen::ArrayXd::Zero(8);
  const double t = 0.4;
  loewner::ConformalChain dil;
  dil.push(loewner::DilationStep{t});
  const auto dz = qle::boundary_length_at(zero, dil, gamma, q, eps, 256, 8);
  const auto z0 = qle::boundary_length_at(zero, id, gamma, q, eps, 256, 8);
  // field(g^{-1}w) = 0, and the Jacobian term contributes q log e^{-t} = -q t
  CHECK(dz.value == doctest::Approx(z0.value * std::exp(-0.5 * gamma * q * t)).epsilon(1e-9));
}
