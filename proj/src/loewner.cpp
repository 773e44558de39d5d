#include "lqg/loewner.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace lqg::loewner {

namespace slit {

FlowResult advance(cplx v, double dt, double rho) {
  FlowResult out;
  // Antipode of the driving point is a fixed point of the flow.
  if (std::abs(v + 1.0) < 1e-14) {
    out.v = v;
    return out;
  }
  const cplx x0 = k(v);
  const double edt = std::exp(dt);

  // The trajectory in the k-plane is x(tau) = e^tau x0; the point is captured
  // when x(tau) comes within rho^2/16 of the slit tip value 1/4
  // (|k - 1/4| ~ |v - 1|^2 / 16 near v = 1).
  const double cap = rho * rho / 16.0;
  const cplx a = x0, b = edt * x0;
  const cplx d = b - a;
  const double dd = std::norm(d);
  double t_seg = 0.0;
  if (dd > 0.0) t_seg = std::clamp(((0.25 - a) * std::conj(d)).real() / dd, 0.0, 1.0);
  const cplx closest = a + t_seg * d;
  if (std::abs(closest - 0.25) <= cap) {
    out.absorbed = true;
    // capacity time at closest approach: e^tau = |closest| / |x0|
    out.tau = (t_seg <= 0.0) ? 0.0
                             : std::min(dt, std::log(std::abs(closest) / std::abs(a)));
    if (!(out.tau >= 0.0)) out.tau = 0.0;
    out.v = v;
    return out;
  }
  out.v = k_inv(b);
  return out;
}

}  // namespace slit

namespace {

constexpr double kRk4Tol = 1e-10;

Eigen::ArrayXcd arc_midpoints(int n) {
  Eigen::ArrayXcd u(n);
  for (int j = 0; j < n; ++j) {
    const double th = 2.0 * M_PI * (j + 0.5) / n;
    u(j) = cplx(std::cos(th), std::sin(th));
  }
  return u;
}

struct MeasureField {
  const Eigen::ArrayXcd& u;
  const Eigen::ArrayXd& p;

  cplx operator()(cplx z) const {
    cplx s = 0.0;
    for (int j = 0; j < u.size(); ++j) {
      if (p(j) == 0.0) continue;
      s += p(j) * phi_field(u(j), z);
    }
    return s;
  }

  cplx deriv(cplx z) const {
    // dPhi/dz = (u+z)/(u-z) + 2 u z / (u-z)^2
    cplx s = 0.0;
    for (int j = 0; j < u.size(); ++j) {
      if (p(j) == 0.0) continue;
      const cplx d = u(j) - z;
      s += p(j) * ((u(j) + z) / d + 2.0 * u(j) * z / (d * d));
    }
    return s;
  }

  double min_dist(cplx z) const {
    double m = 2.0;
    for (int j = 0; j < u.size(); ++j) {
      if (p(j) == 0.0) continue;
      m = std::min(m, std::abs(u(j) - z));
    }
    return m;
  }
};

// One RK4 step of size h for position and (optionally) log-derivative.
void rk4_step(const MeasureField& f, double h, cplx& z, cplx* dlog) {
  const cplx k1 = f(z);
  const cplx k2 = f(z + 0.5 * h * k1);
  const cplx k3 = f(z + 0.5 * h * k2);
  const cplx k4 = f(z + h * k3);
  const cplx znew = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (dlog) {
    const cplx d1 = f.deriv(z);
    const cplx d2 = f.deriv(z + 0.5 * h * k1);
    const cplx d3 = f.deriv(z + 0.5 * h * k2);
    const cplx d4 = f.deriv(z + h * k3);
    *dlog += (h / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4);
  }
  z = znew;
}

struct MeasureFlow {
  cplx z;
  cplx dlog{0.0, 0.0};
  bool absorbed = false;
  double tau = 0.0;
};

// Integrates the measure-driven field over [0, dt] with per-point adaptive
// substepping near the singular arcs; capture within kSwallowCutoff.
MeasureFlow flow_measure(const MeasureField& f, double dt, cplx z0, bool want_deriv) {
  MeasureFlow out;
  out.z = z0;
  double t = 0.0;
  const double h_min = dt * 1e-6;
  int guard = 0;
  while (t < dt) {
    if (++guard > 200'000) throw StepTooLarge("measure-driven substep underflow");
    const double dist = f.min_dist(out.z);
    if (dist < kSwallowCutoff) {
      out.absorbed = true;
      out.tau = t;
      return out;
    }
    // step by the local stiffness |F'|, not the raw distance: a spread-out
    // measure is smooth even close to the circle
    const double stiff = std::abs(f.deriv(out.z));
    double h = std::clamp(0.05 / (1.0 + stiff), h_min, dt - t);
    while (true) {
      cplx z_full = out.z, z_half = out.z;
      cplx dl_full = out.dlog, dl_half = out.dlog;
      rk4_step(f, h, z_full, want_deriv ? &dl_full : nullptr);
      rk4_step(f, 0.5 * h, z_half, want_deriv ? &dl_half : nullptr);
      rk4_step(f, 0.5 * h, z_half, want_deriv ? &dl_half : nullptr);
      if (std::abs(z_full - z_half) <= kRk4Tol || h <= h_min) {
        if (std::abs(z_full - z_half) > kRk4Tol)
          throw StepTooLarge("RK4 error above tolerance at minimum substep");
        out.z = z_half;
        out.dlog = dl_half;
        t += h;
        break;
      }
      h = std::max(0.5 * h, h_min);
    }
  }
  return out;
}

void apply_forward(const ChainStep& s, MappedPoint& p, double t_before) {
  if (p.absorbed) return;
  if (const auto* ss = std::get_if<SlitStep>(&s)) {
    const cplx v = p.w / ss->u;
    auto r = slit::advance(v, ss->dt, kSwallowCutoff);
    if (r.absorbed) {
      p.absorbed = true;
      p.capacity_time = t_before + r.tau;
      return;
    }
    const cplx v1 = r.v;
    p.deriv *= slit::forward_deriv(v, v1, std::exp(ss->dt));
    p.w = ss->u * v1;
  } else if (const auto* ms = std::get_if<MeasureStep>(&s)) {
    const Eigen::ArrayXcd u = arc_midpoints(static_cast<int>(ms->weights.size()));
    MeasureField f{u, ms->weights};
    auto r = flow_measure(f, ms->dt, p.w, true);
    if (r.absorbed) {
      p.absorbed = true;
      p.capacity_time = t_before + r.tau;
      return;
    }
    p.w = r.z;
    p.deriv *= std::exp(r.dlog);
  } else if (const auto* rs = std::get_if<RotationStep>(&s)) {
    p.w *= std::polar(1.0, rs->theta);
  } else if (const auto* ds = std::get_if<DilationStep>(&s)) {
    const double f = std::exp(ds->t);
    p.w *= f;
    p.deriv *= f;
  }
}

cplx apply_inverse(const ChainStep& s, cplx w, cplx& deriv) {
  if (const auto* ss = std::get_if<SlitStep>(&s)) {
    const cplx v1 = w / ss->u;
    const cplx v0 = slit::k_inv(std::exp(-ss->dt) * slit::k(v1));
    deriv /= slit::forward_deriv(v0, v1, std::exp(ss->dt));
    return ss->u * v0;
  }
  if (const auto* ms = std::get_if<MeasureStep>(&s)) {
    // reverse flow: integrate -F from the image for time dt
    const int n = static_cast<int>(ms->weights.size());
    const Eigen::ArrayXcd u = arc_midpoints(n);
    Eigen::ArrayXd negw = -ms->weights;
    // Reuse machinery with negated weights: field(-p) = -field(p).
    MeasureField f{u, negw};
    auto r = flow_measure(f, ms->dt, w, true);
    deriv *= std::exp(r.dlog);  // d log g^{-1} accumulates directly
    return r.z;
  }
  if (const auto* rs = std::get_if<RotationStep>(&s)) {
    return w * std::polar(1.0, -rs->theta);
  }
  const auto& ds = std::get<DilationStep>(s);
  const double f = std::exp(-ds.t);
  deriv *= f;
  return w * f;
}

double step_capacity(const ChainStep& s) {
  if (const auto* ss = std::get_if<SlitStep>(&s)) return ss->dt;
  if (const auto* ms = std::get_if<MeasureStep>(&s)) return ms->dt;
  if (const auto* ds = std::get_if<DilationStep>(&s)) return ds->t;
  return 0.0;
}

}  // namespace

void ConformalChain::push(ChainStep s) {
  capacity_ += step_capacity(s);
  steps_.push_back(std::move(s));
}

MappedPoint ConformalChain::forward(cplx z, std::size_t from) const {
  MappedPoint p;
  p.w = z;
  double t = 0.0;
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    if (i >= from) {
      apply_forward(steps_[i], p, t);
      if (p.absorbed) return p;
    }
    t += step_capacity(steps_[i]);
  }
  return p;
}

InvertResult ConformalChain::inverse(cplx w) const {
  InvertResult r;
  r.lost_precision = std::abs(w) > 0.95;
  cplx z = w;
  cplx deriv = 1.0;
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it)
    z = apply_inverse(*it, z, deriv);
  r.z = z;
  r.deriv = deriv;
  return r;
}

double ConformalChain::log_deriv_origin() const {
  MappedPoint p = forward(cplx{0.0, 0.0});
  return std::log(std::abs(p.deriv));
}

std::vector<PointStatus> evolve_point(ConformalChain& chain, const DrivingPath& driving,
                                      std::vector<MappedPoint>& tracked) {
  std::vector<PointStatus> st(tracked.size());
  double t = chain.total_capacity();
  for (double theta : driving.angles) {
    const ChainStep step = SlitStep{driving.dt, std::polar(1.0, theta)};
    for (std::size_t i = 0; i < tracked.size(); ++i) {
      if (tracked[i].absorbed) continue;
      apply_forward(step, tracked[i], t);
      if (tracked[i].absorbed) {
        st[i].swallowed = true;
        st[i].capacity_time = tracked[i].capacity_time;
      }
    }
    chain.push(step);
    t += driving.dt;
  }
  return st;
}

std::vector<PointStatus> evolve_measure(ConformalChain& chain, const DrivingMeasure& driving,
                                        std::vector<MappedPoint>& tracked) {
  std::vector<PointStatus> st(tracked.size());
  double t = chain.total_capacity();
  for (const auto& row : driving.rows) {
    if (std::abs(row.sum() - 1.0) > 1e-12)
      throw std::invalid_argument("driving measure row does not sum to 1");
    const ChainStep step = MeasureStep{driving.dt, row};
    for (std::size_t i = 0; i < tracked.size(); ++i) {
      if (tracked[i].absorbed) continue;
      apply_forward(step, tracked[i], t);
      if (tracked[i].absorbed) {
        st[i].swallowed = true;
        st[i].capacity_time = tracked[i].capacity_time;
      }
    }
    chain.push(step);
    t += driving.dt;
  }
  return st;
}

InvertResult invert(const ConformalChain& chain, cplx w) { return chain.inverse(w); }

double caratheodory_diagnostic(const ConformalChain& a, const ConformalChain& b, double r,
                               int n_probe) {
  double sup = 0.0;
  for (int j = 0; j < n_probe; ++j) {
    const double th = 2.0 * M_PI * j / n_probe;
    const cplx w = std::polar(r, th);
    sup = std::max(sup, std::abs(a.inverse(w).z - b.inverse(w).z));
  }
  return sup;
}

// ---------------------------------------------------------------------------
// TrackedGrid / swallow_scan
// ---------------------------------------------------------------------------

TrackedGrid::TrackedGrid(int res) : res_(res) {
  const int n = res * res;
  in_disk_.assign(n, false);
  pts_.resize(n);
  swallow_step_.assign(n, -1);
  const double h = 2.0 / res;
  double best = 2.0;
  origin_ = 0;
  for (int iy = 0; iy < res; ++iy) {
    for (int ix = 0; ix < res; ++ix) {
      const int idx = cell_index(ix, iy);
      const cplx c(-1.0 + (ix + 0.5) * h, -1.0 + (iy + 0.5) * h);
      pts_[idx].w = c;
      if (std::abs(c) < 1.0) {
        in_disk_[idx] = true;
        if (std::abs(c) < best) {
          best = std::abs(c);
          origin_ = idx;
        }
      } else {
        pts_[idx].absorbed = true;  // outside cells are never tracked
      }
    }
  }
}

cplx TrackedGrid::center(int idx) const {
  const double h = 2.0 / res_;
  const int ix = idx % res_;
  const int iy = idx / res_;
  return cplx(-1.0 + (ix + 0.5) * h, -1.0 + (iy + 0.5) * h);
}

void TrackedGrid::record_steps(const ConformalChain& chain, std::size_t first_new_step) {
  // Capacity offset of the first new step
  double t0 = 0.0;
  for (std::size_t i = 0; i < first_new_step; ++i) {
    const auto& s = chain.steps()[i];
    if (const auto* ss = std::get_if<SlitStep>(&s)) t0 += ss->dt;
    else if (const auto* ms = std::get_if<MeasureStep>(&s)) t0 += ms->dt;
    else if (const auto* ds = std::get_if<DilationStep>(&s)) t0 += ds->t;
  }
  for (int idx = 0; idx < res_ * res_; ++idx) {
    if (!in_disk_[idx] || swallow_step_[idx] >= 0) continue;
    MappedPoint& p = pts_[idx];
    if (p.absorbed) continue;
    double t = t0;
    for (std::size_t i = first_new_step; i < chain.steps().size(); ++i) {
      apply_forward(chain.steps()[i], p, t);
      if (p.absorbed) {
        // step index holding the absorption time
        double acc = 0.0;
        std::size_t k = 0;
        for (; k < chain.steps().size(); ++k) {
          const double d = step_capacity(chain.steps()[k]);
          if (p.capacity_time < acc + d || k + 1 == chain.steps().size()) break;
          acc += d;
        }
        swallow_step_[idx] = static_cast<int>(k);
        break;
      }
      t += step_capacity(chain.steps()[i]);
    }
  }
}

std::vector<SwallowEvent> swallow_scan(const TrackedGrid& grid, double dt,
                                       int artifact_cells) {
  const int res = grid.res();
  const int n = res * res;
  std::vector<int> comp(n, -1);
  std::vector<SwallowEvent> events;

  auto step_of = [&](int idx) { return grid.swallow_step()[idx]; };

  for (int idx = 0; idx < n; ++idx) {
    if (step_of(idx) < 0 || comp[idx] >= 0) continue;
    // BFS over same-step 4-neighbours
    SwallowEvent ev;
    ev.step_index = step_of(idx);
    ev.capacity_time = (ev.step_index + 1) * dt;
    std::queue<int> q;
    q.push(idx);
    comp[idx] = static_cast<int>(events.size());
    bool touches_origin = false;
    while (!q.empty()) {
      const int c = q.front();
      q.pop();
      ev.cells.push_back(c);
      if (c == grid.origin_cell()) touches_origin = true;
      const int ix = c % res, iy = c / res;
      const int nb[4] = {c - 1, c + 1, c - res, c + res};
      const bool ok[4] = {ix > 0, ix + 1 < res, iy > 0, iy + 1 < res};
      bool frontier = false;
      for (int k = 0; k < 4; ++k) {
        if (!ok[k]) continue;
        const int b = nb[k];
        if (step_of(b) == ev.step_index) {
          if (comp[b] < 0) {
            comp[b] = comp[c];
            q.push(b);
          }
        } else if (step_of(b) < 0 && grid.in_disk(b)) {
          frontier = true;  // neighbour survived
        }
      }
      if (frontier) ev.boundary_cells.push_back(c);
    }
    if (touches_origin) continue;
    if (static_cast<int>(ev.cells.size()) <= artifact_cells) continue;
    std::sort(ev.cells.begin(), ev.cells.end());
    events.push_back(std::move(ev));
  }
  std::sort(events.begin(), events.end(), [](const SwallowEvent& a, const SwallowEvent& b) {
    if (a.step_index != b.step_index) return a.step_index < b.step_index;
    return a.cells.front() < b.cells.front();
  });
  return events;
}

}  // namespace lqg::loewner
