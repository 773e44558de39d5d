#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <unordered_set>

#include "lqg/qle.hpp"

namespace lqg::qle {

namespace {

inline double wrap2pi(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  return a < 0.0 ? a + 2.0 * M_PI : a;
}

// ---------------------------------------------------------------------------
// Wall raster: curve footprint cells and enclosure detection on the grid.
// Cell states: 0 free, 1 wall, 2 pocket (enclosed), 3 outside the disk.
// ---------------------------------------------------------------------------
class WallRaster {
 public:
  WallRaster(int res, const gmc::AreaMeasure& area) : res_(res), area_(&area) {
    state_.assign(res * res, 0);
    const double h = 2.0 / res;
    for (int iy = 0; iy < res; ++iy)
      for (int ix = 0; ix < res; ++ix) {
        const double x = -1.0 + (ix + 0.5) * h;
        const double y = -1.0 + (iy + 0.5) * h;
        if (x * x + y * y >= 1.0) state_[iy * res + ix] = 3;
      }
    origin_ = cell_of(cplx(0.0, 0.0));
    visit_gen_.assign(res * res, 0);
    visit_label_.assign(res * res, -1);
  }

  cplx cell_center(int idx) const {
    const double h = 2.0 / res_;
    return cplx(-1.0 + (idx % res_ + 0.5) * h, -1.0 + (idx / res_ + 0.5) * h);
  }

  int cell_of(cplx z) const {
    const double h = 2.0 / res_;
    const int ix = std::clamp(static_cast<int>((z.real() + 1.0) / h), 0, res_ - 1);
    const int iy = std::clamp(static_cast<int>((z.imag() + 1.0) / h), 0, res_ - 1);
    return iy * res_ + ix;
  }

  struct StepResult {
    double wall_mass = 0.0;
    std::vector<std::vector<int>> pockets;
  };

  StepResult add_polyline(const std::vector<cplx>& pts) {
    StepResult out;
    new_walls_.clear();
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) mark_segment(pts[i], pts[i + 1], out);
    detect_pockets(out);
    return out;
  }

  double live_connected_mass(std::vector<int>* cells = nullptr) const {
    if (state_[origin_] != 0) return 0.0;
    std::vector<std::uint8_t> seen(res_ * res_, 0);
    std::queue<int> q;
    q.push(origin_);
    seen[origin_] = 1;
    double mass = 0.0;
    while (!q.empty()) {
      const int c = q.front();
      q.pop();
      mass += area_->cell_masses(c);
      if (cells) cells->push_back(c);
      for (int nb : neighbours(c)) {
        if (nb < 0 || seen[nb] || state_[nb] != 0) continue;
        seen[nb] = 1;
        q.push(nb);
      }
    }
    return mass;
  }

  double wall_mass_total() const { return wall_mass_total_; }
  std::uint8_t state(int idx) const { return state_[idx]; }
  int origin_cell() const { return origin_; }

  std::array<int, 4> neighbours(int c) const {
    const int ix = c % res_, iy = c / res_;
    return {ix > 0 ? c - 1 : -1, ix + 1 < res_ ? c + 1 : -1, iy > 0 ? c - res_ : -1,
            iy + 1 < res_ ? c + res_ : -1};
  }

 private:
  void mark_cell(int idx, StepResult& out) {
    if (idx < 0 || state_[idx] != 0) return;
    if (idx == origin_) return;  // the origin cell is never walled
    state_[idx] = 1;
    out.wall_mass += area_->cell_masses(idx);
    wall_mass_total_ += area_->cell_masses(idx);
    new_walls_.push_back(idx);
  }

  void mark_segment(cplx a, cplx b, StepResult& out) {
    const double h = 2.0 / res_;
    const double len = std::abs(b - a);
    const int n = std::max(1, static_cast<int>(std::ceil(len / (0.4 * h))));
    for (int i = 0; i <= n; ++i) {
      const cplx p = a + (b - a) * (static_cast<double>(i) / n);
      if (std::norm(p) >= 1.0) continue;
      mark_cell(cell_of(p), out);
    }
  }

  // Round-robin BFS from the free neighbours of the new wall cells. Fronts
  // merge on contact; a front that exhausts without holding the origin is an
  // enclosed pocket. Balanced growth keeps the cost near the pocket size.
  void detect_pockets(StepResult& out) {
    if (new_walls_.empty()) return;
    std::vector<int> seeds;
    for (int wcell : new_walls_)
      for (int nb : neighbours(wcell))
        if (nb >= 0 && state_[nb] == 0) seeds.push_back(nb);
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
    if (seeds.size() < 2) return;

    ++generation_;
    struct Front {
      std::queue<int> q;
      std::vector<int> cells;
      bool alive = true;
      bool has_origin = false;
    };
    std::vector<Front> fronts;
    std::vector<int> parent;
    auto root = [&](int l) {
      while (parent[l] != l) l = parent[l] = parent[parent[l]];
      return l;
    };
    for (int s : seeds) {
      if (visit_gen_[s] == generation_) continue;
      Front f;
      f.q.push(s);
      f.cells.push_back(s);
      f.has_origin = (s == origin_);
      visit_gen_[s] = generation_;
      visit_label_[s] = static_cast<int>(fronts.size());
      fronts.push_back(std::move(f));
      parent.push_back(static_cast<int>(parent.size()));
    }
    if (fronts.size() < 2) return;

    int alive = static_cast<int>(fronts.size());
    while (alive > 1) {
      bool progressed = false;
      for (std::size_t fi = 0; fi < fronts.size(); ++fi) {
        Front& f = fronts[fi];
        if (!f.alive) continue;
        if (root(static_cast<int>(fi)) != static_cast<int>(fi)) {
          f.alive = false;
          --alive;
          continue;
        }
        if (f.q.empty()) {
          f.alive = false;
          --alive;
          if (!f.has_origin) out.pockets.push_back(std::move(f.cells));
          continue;
        }
        progressed = true;
        const int c = f.q.front();
        f.q.pop();
        for (int nb : neighbours(c)) {
          if (nb < 0 || state_[nb] != 0) continue;
          if (visit_gen_[nb] == generation_) {
            const int other = root(visit_label_[nb]);
            const int mine = root(static_cast<int>(fi));
            if (other != mine) {
              const int lo = std::min(other, mine), hi = std::max(other, mine);
              parent[hi] = lo;
              Front& dst = fronts[lo];
              Front& src = fronts[hi];
              while (!src.q.empty()) {
                dst.q.push(src.q.front());
                src.q.pop();
              }
              dst.cells.insert(dst.cells.end(), src.cells.begin(), src.cells.end());
              dst.has_origin = dst.has_origin || src.has_origin;
              src.cells.clear();
            }
            continue;
          }
          visit_gen_[nb] = generation_;
          visit_label_[nb] = root(static_cast<int>(fi));
          f.q.push(nb);
          f.cells.push_back(nb);
          if (nb == origin_) f.has_origin = true;
        }
      }
      if (!progressed) break;
    }
    for (auto& p : out.pockets)
      for (int c : p)
        if (state_[c] == 0) state_[c] = 2;
  }

  int res_;
  const gmc::AreaMeasure* area_;
  std::vector<std::uint8_t> state_;
  std::vector<int> new_walls_;
  std::vector<std::uint32_t> visit_gen_;
  std::vector<int> visit_label_;
  std::uint32_t generation_ = 0;
  double wall_mass_total_ = 0.0;
  int origin_ = 0;
};

}  // namespace

// ---------------------------------------------------------------------------
// Reference boundary length via exact chain inversion.
// ---------------------------------------------------------------------------
BoundaryLengthResult boundary_length_at(const FieldSample& field,
                                        const loewner::ConformalChain& chain, double gamma,
                                        double q, double eps, int n_arcs, int quad_nodes) {
  BoundaryLengthResult out;
  const double arclen = 2.0 * M_PI / n_arcs;
  const double pref = std::pow(eps, gamma * gamma / 4.0) * arclen;
  const double half = M_PI / 2.0 - std::asin(std::min(1.0, eps * 0.5));
  static const double gx[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                               -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                               0.7966664774136267,  0.9602898564975363};
  static const double gw[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                               0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                               0.2223810344533745, 0.1012285362903763};
  const int nq = std::min(quad_nodes, 8);
  for (int j = 0; j < n_arcs; ++j) {
    const double th = (j + 0.5) * arclen;
    const cplx x = std::polar(1.0, th);
    double acc = 0.0, wsum = 0.0;
    for (int k = 0; k < nq; ++k) {
      const double phiq = th + (M_PI - half) + (gx[k] + 1.0) * 0.5 * (2.0 * half);
      const cplx p = x + std::polar(eps, phiq);
      const auto inv = chain.inverse(p);
      const auto fwd = chain.forward(inv.z);
      if (inv.lost_precision || fwd.absorbed || std::abs(fwd.w - p) > 1e-5)
        ++out.near_singularity;
      acc += gw[k] * (field.value(inv.z) + q * std::log(std::max(std::abs(inv.deriv), 1e-300)));
      wsum += gw[k];
    }
    out.value += pref * std::exp(0.5 * gamma * (acc / wsum));
  }
  return out;
}

std::vector<SwallowRecord> swallowed_registry(const GrowthTrace& trace) {
  std::vector<SwallowRecord> out;
  for (const auto& r : trace.swallow_records)
    if (!r.terminal) out.push_back(r);
  return out;
}

namespace {

struct StartState {
  FieldSample field;
  gmc::AreaMeasure area;
  double tip_angle0 = 0.0;
};

// Start state (field, tip) via the disintegration identity, rebased so the
// engine's own t=0 measurement reads exactly ell0.
StartState prepare_start(const RunConfig& cfg) {
  StartState st;
  const ParamSet& P = cfg.params;
  const double eps = cfg.eps();
  Rng master = Rng::stream(cfg.seed, 0);
  st.tip_angle0 = master.uniform(0.0, 2.0 * M_PI);
  gff::GffConfig gcfg;
  gcfg.res = cfg.grid_resolution;
  gcfg.n_modes = cfg.n_modes;
  gcfg.method = gff::SampleMethod::Modes;
  auto fixed = gff::sample_fixed_length(P, cfg.ell0, std::polar(1.0, st.tip_angle0), gcfg,
                                        Rng::mix(cfg.seed) ^ 0xabcdULL, eps);
  st.field = std::move(fixed.field);
  {
    gmc::AreaMeasure area0 = gmc::area_measure(st.field, P.gamma, eps);
    FrontierEngine probe(st.field, area0, cfg);
    const auto m0 = probe.measure_length(cfg.n_arcs_chain, cfg.quad_chain);
    if (!(m0.total > 0.0) || !std::isfinite(m0.total))
      throw ClockFailure("degenerate initial boundary measurement");
    st.field.constant += (2.0 / P.gamma) * std::log(cfg.ell0 / m0.total);
  }
  st.area = gmc::area_measure(st.field, P.gamma, eps);
  return st;
}

void fill_trace_meta(GrowthTrace& trace, const StartState& st, const RunConfig& cfg) {
  trace.seed = cfg.seed;
  trace.weight = st.field.weight;
  trace.total_area = st.area.total();
  int n_cells = 0;
  for (int i = 0; i < st.area.cell_masses.size(); ++i)
    if (st.area.cell_masses(i) > 0.0) ++n_cells;
  trace.mean_cell_mass = n_cells > 0 ? trace.total_area / n_cells : 0.0;
}

// Stationarity observables of the normalized field psi = phi_s - (2/gamma) log L_s.
void measure_observables(const FrontierEngine& eng, const gmc::AreaMeasure& area,
                         const RunConfig& cfg, RunResult& result) {
  const ParamSet& P = cfg.params;
  const auto lm = eng.measure_length(cfg.n_arcs_chain, cfg.quad_chain);
  result.L_stop = lm.total;
  const double Ls = std::max(lm.total, 1e-300);

  const int nprobe = 256;
  std::vector<cplx> poly(nprobe);
  for (int k = 0; k < nprobe; ++k)
    poly[k] = eng.eval_inverse(std::polar(0.5, 2.0 * M_PI * k / nprobe)).z;
  double mass = 0.0;
  const int res = cfg.grid_resolution;
  const double h = 2.0 / res;
  for (int iy = 0; iy < res; ++iy) {
    for (int ix = 0; ix < res; ++ix) {
      const int idx = iy * res + ix;
      if (area.cell_masses(idx) <= 0.0) continue;
      const cplx z(-1.0 + (ix + 0.5) * h, -1.0 + (iy + 0.5) * h);
      int wind = 0;
      for (int k = 0; k < nprobe; ++k) {
        const cplx a = poly[k] - z, b = poly[(k + 1) % nprobe] - z;
        const double cross = a.real() * b.imag() - a.imag() * b.real();
        if (a.imag() <= 0.0 && b.imag() > 0.0 && cross > 0.0) ++wind;
        else if (a.imag() > 0.0 && b.imag() <= 0.0 && cross < 0.0) --wind;
      }
      if (wind != 0) mass += area.cell_masses(idx);
    }
  }
  result.area_b_half = mass / (Ls * Ls);
  const auto arcm = eng.measure_arcs(P.gamma, 4, cfg.quad_chain);
  for (int k = 0; k < 4; ++k) result.arcs_gamma[k] = arcm(k) / Ls;
  const auto arcb = eng.measure_arcs(P.beta, cfg.n_arcs_chain, cfg.quad_chain);
  result.beta_mass_total = arcb.sum() * std::pow(Ls, -P.beta / P.gamma);
}

HullSnapshot take_snapshot(const FrontierEngine& eng, double s) {
  HullSnapshot snap;
  snap.s = s;
  snap.t = eng.capacity();
  for (const auto& m : eng.markers()) snap.frontier.push_back(m.anchor);
  snap.tip = eng.markers().empty() ? cplx(1.0, 0.0) : eng.markers().front().anchor;
  return snap;
}

}  // namespace

RunResult observe_start(const RunConfig& cfg) {
  RunResult result;
  StartState st = prepare_start(cfg);
  fill_trace_meta(result.trace, st, cfg);
  FrontierEngine eng(st.field, st.area, cfg);
  measure_observables(eng, st.area, cfg, result);
  result.reached_stop = true;
  result.trace.samples.push_back({0.0, 0.0, result.L_stop, result.L_stop, 0.0, 0.0, 0.0, 0.0});
  return result;
}

// ---------------------------------------------------------------------------
// Run loop
// ---------------------------------------------------------------------------
RunResult run_delta_qle(const RunConfig& cfg) {
  RunResult result;
  GrowthTrace& trace = result.trace;
  const ParamSet& P = cfg.params;
  const double eps = cfg.eps();
  const double cell = 2.0 / cfg.grid_resolution;

  StartState st = prepare_start(cfg);
  FieldSample& field = st.field;
  gmc::AreaMeasure& area = st.area;
  const double tip_angle0 = st.tip_angle0;
  fill_trace_meta(trace, st, cfg);

  FrontierEngine eng(field, area, cfg);
  WallRaster ras(cfg.grid_resolution, area);
  sle::QuantumClock clock(P.phase, 1.0, cfg.eps_count);

  const double t_end = std::min(-std::log(cfg.r0), cfg.capacity_budget);
  const bool dilute = P.phase == Phase::Dilute;

  double s = 0.0;
  double L_checkpoint = cfg.ell0;
  double A_pockets = 0.0;
  // junctions: boundary angles bracketing the arcs freshly added since the
  // last clock tick (dilute clock); they flow like any boundary point
  double junction_L = tip_angle0, junction_R = tip_angle0;
  bool junctions_fresh = true;

  trace.samples.push_back({0.0, 0.0, cfg.ell0, cfg.ell0, 0.0, 0.0, 0.0, 0.0});
  trace.tip_events.push_back({0.0, tip_angle0, false});

  Rng drive_rng = Rng::stream(cfg.seed, 1);
  double theta = tip_angle0;
  bool fresh_tip = true;
  const double sig = std::sqrt(P.kappa * cfg.dt);

  int segment = 0;
  double segment_target = cfg.delta;
  int steps_since_checkpoint = 0;
  int checkpoint_count = 0;
  const int base_interval =
      dilute ? 32 : std::max(32, static_cast<int>(t_end / cfg.dt / 400.0));
  int checkpoint_interval = base_interval;
  bool budget = false;

  // doomed-interval caches per side (pre-swallow jump masses)
  struct SideCache {
    double mass = -1.0;
    int age = 0;
  } cacheL, cacheR;
  const double w_trigger = 3.0 * eps;

  auto refresh_pinch_cache = [&](double theta_u) {
    const auto& mk = eng.markers();
    const std::size_t n = mk.size();
    if (n < 8) return;
    for (int pass = 0; pass < 2; ++pass) {
      double lo_x = 1e9, hi_x = -1e9, lo_y = 1e9, hi_y = -1e9;
      double outer = theta_u;
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const Marker& m = pass == 0 ? mk[i] : mk[n - 1 - i];
        const double rel = pass == 0 ? wrap2pi(m.psi - theta_u) : wrap2pi(theta_u - m.psi);
        if (rel > w_trigger) break;
        outer = m.psi;
        lo_x = std::min(lo_x, m.anchor.real());
        hi_x = std::max(hi_x, m.anchor.real());
        lo_y = std::min(lo_y, m.anchor.imag());
        hi_y = std::max(hi_y, m.anchor.imag());
        ++count;
      }
      SideCache& sc = pass == 0 ? cacheL : cacheR;
      if (count >= 6 && std::hypot(hi_x - lo_x, hi_y - lo_y) > 3.0 * cell) {
        if (sc.mass < 0.0 || ++sc.age > 64) {
          sc.mass = pass == 0 ? eng.window_mass(theta_u, outer, cfg.quad_chain)
                              : eng.window_mass(outer, theta_u, cfg.quad_chain);
          sc.age = 0;
        }
      } else {
        sc.mass = -1.0;
        sc.age = 0;
      }
    }
  };

  std::size_t next_snapshot = 0;
  std::vector<double> snap_times = cfg.snapshot_s;
  std::sort(snap_times.begin(), snap_times.end());
  while (next_snapshot < snap_times.size() && snap_times[next_snapshot] <= 0.0) {
    result.snapshots.push_back(take_snapshot(eng, 0.0));
    ++next_snapshot;
  }

  while (eng.capacity() < t_end) {
    if (eng.capacity() >= cfg.capacity_budget) {
      budget = true;
      break;
    }

    if (!fresh_tip) theta = wrap2pi(theta + sig * drive_rng.normal());
    fresh_tip = false;
    if (!junctions_fresh) {
      junction_L = FrontierEngine::step_angle(junction_L, theta, cfg.dt);
      junction_R = FrontierEngine::step_angle(junction_R, theta, cfg.dt);
    }
    eng.step(theta);
    if (junctions_fresh) {
      // seed the junctions at the innermost fresh marker pair (distinct sides)
      junction_L = eng.markers().front().psi;
      junction_R = eng.markers().back().psi;
      junctions_fresh = false;
    }
    const auto ras_step = ras.add_polyline(eng.last_slit_anchors());

    double step_pocket_mass = 0.0;
    std::vector<double> step_jumps;
    if (!ras_step.pockets.empty()) {
      for (const auto& pocket : ras_step.pockets) {
        double pocket_mass = 0.0;
        cplx centroid(0.0, 0.0);
        for (int c : pocket) {
          pocket_mass += area.cell_masses(c);
          centroid += ras.cell_center(c);
        }
        centroid /= static_cast<double>(pocket.size());

        // drop doomed markers: anchors inside the pocket (1-cell dilation)
        std::unordered_set<int> cells(pocket.begin(), pocket.end());
        const double dil = 1.5 * cell;
        const std::size_t dropped = eng.drop_where([&](const Marker& m) {
          const int c = ras.cell_of(m.anchor);
          if (cells.count(c)) return true;
          return std::abs(m.anchor - centroid) < dil;
        });

        double jump = 0.0;
        if (cacheL.mass > 0.0 && dropped > 0) {
          jump = cacheL.mass;
          cacheL.mass = -1.0;
        } else if (cacheR.mass > 0.0 && dropped > 0) {
          jump = cacheR.mass;
          cacheR.mass = -1.0;
        } else {
          jump = -1.0;  // unresolved at the boundary (grid-scale pocket)
        }

        SwallowRecord rec;
        rec.s = s;
        rec.t = eng.capacity();
        rec.jump = jump;
        rec.area = pocket_mass;
        rec.n_cells = static_cast<int>(pocket.size());
        rec.step = static_cast<int>(trace.samples.size());
        trace.swallow_records.push_back(rec);
        if (jump > 0.0) step_jumps.push_back(jump);
        step_pocket_mass += pocket_mass;
      }
    }
    A_pockets += step_pocket_mass;

    if (P.phase == Phase::SpaceFilling) {
      s = clock.accumulated() + 0.0;
      clock.tick_area(ras_step.wall_mass + step_pocket_mass);
      s = clock.accumulated();
    } else if (P.phase == Phase::Swallowing) {
      if (!step_jumps.empty()) clock.tick_swallow(step_jumps, P.gamma);
      s = clock.accumulated();
    }

    refresh_pinch_cache(theta);

    while (next_snapshot < snap_times.size() && s >= snap_times[next_snapshot]) {
      result.snapshots.push_back(take_snapshot(eng, s));
      ++next_snapshot;
    }

    bool checkpoint_due = ++steps_since_checkpoint >= checkpoint_interval;
    const bool at_end = eng.capacity() + 0.5 * cfg.dt >= t_end;
    if (checkpoint_due || at_end) {
      steps_since_checkpoint = 0;
      ++checkpoint_count;
      double side_disc = 0.0;
      if (dilute) {
        // added mass on the two fresh curve-side windows since the last tick
        const double incL = eng.window_mass(theta, junction_L, cfg.quad_chain);
        const double incR = eng.window_mass(junction_R, theta, cfg.quad_chain);
        clock.tick_simple_arcs(incL, incR);
        s = clock.accumulated();
        side_disc = clock.side_discrepancy();
        junction_L = eng.markers().front().psi;
        junction_R = eng.markers().back().psi;
        const double growth = std::max(incL + incR, 1e-12);
        const double target_growth = cfg.delta / 4.0;  // L units = 2 x quantum
        checkpoint_interval = std::clamp(
            static_cast<int>(checkpoint_interval * target_growth / growth), 4, 1024);
      }

      // full-circle measurement at a sparser cadence; L in the trace is the
      // clock's boundary-length process, the measured total rides along
      const bool full_measure = !dilute || (checkpoint_count & 7) == 0 || at_end;
      if (full_measure) {
        const auto lm = eng.measure_length(cfg.n_arcs_chain, cfg.quad_chain);
        L_checkpoint = lm.total;
        const double L_process = dilute ? cfg.ell0 + 2.0 * s : lm.total;
        const bool advance = trace.samples.empty() || s > trace.samples.back().s;
        if (advance || at_end) {
          TraceSample ts;
          ts.s = s;
          ts.t = eng.capacity();
          ts.L = L_process;
          ts.L_gmc = lm.total;
          ts.A_explored = P.phase == Phase::SpaceFilling ? clock.accumulated() : A_pockets;
          ts.A_pockets = A_pockets;
          ts.footprint_mass = ras.wall_mass_total();
          ts.side_discrepancy = side_disc;
          trace.samples.push_back(ts);
        }
        eng.snapshot_angles();
      }
      if (cfg.s_stop > 0.0 && s >= cfg.s_stop) break;
    }

    if (s >= segment_target) {
      ++segment;
      segment_target = cfg.delta * (segment + 1);
      const auto arcs = eng.measure_arcs(P.beta, cfg.n_arcs_chain, cfg.quad_chain);
      const double tot = arcs.sum();
      if (!(tot > 0.0) || !std::isfinite(tot))
        throw ClockFailure("beta measure degenerate at tip resampling");
      double u = drive_rng.uniform() * tot;
      int arc = 0;
      for (; arc < arcs.size() - 1; ++arc) {
        if (u < arcs(arc)) break;
        u -= arcs(arc);
      }
      const double w = 2.0 * M_PI / cfg.n_arcs_chain;
      const double new_theta = wrap2pi(arc * w + drive_rng.uniform() * w);
      bool limited = false;
      (void)eng.boundary_preimage(new_theta, &limited);
      trace.tip_events.push_back({s, new_theta, limited});
      theta = new_theta;
      fresh_tip = true;
      junctions_fresh = true;
      cacheL.mass = cacheR.mass = -1.0;
    }
  }

  trace.duration_s = s;
  trace.duration_t = eng.capacity();
  trace.budget_exhausted = budget;
  trace.near_singularity_count = eng.flagged_nodes();
  trace.footprint_mass = ras.wall_mass_total();
  trace.terminal_live_mass = ras.live_connected_mass(nullptr);

  // terminal record closes the area partition: live mass plus walls
  if (P.phase == Phase::Swallowing || P.phase == Phase::SpaceFilling) {
    SwallowRecord rec;
    rec.s = s;
    rec.t = eng.capacity();
    rec.jump = L_checkpoint;
    rec.area = trace.terminal_live_mass + ras.wall_mass_total();
    rec.n_cells = 0;
    rec.terminal = true;
    trace.swallow_records.push_back(rec);
  }

  // stop-time observables for the stationarity harness
  measure_observables(eng, area, cfg, result);
  result.reached_stop = cfg.s_stop <= 0.0 || s >= cfg.s_stop;

  return result;
}

}  // namespace lqg::qle
