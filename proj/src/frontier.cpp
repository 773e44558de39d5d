#include <algorithm>
#include <cmath>

#include "lqg/qle.hpp"

namespace lqg::qle {

namespace {

inline double wrap2pi(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  return a < 0.0 ? a + 2.0 * M_PI : a;
}

inline double wrap_pm(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

// Gauss-Legendre 8-point on [-1,1] (positive half; symmetric)
constexpr int kG8 = 4;
const double kG8x[kG8] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                          0.9602898564975363};
const double kG8w[kG8] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                          0.1012285362903763};

}  // namespace

FrontierEngine::FrontierEngine(const FieldSample& field, const gmc::AreaMeasure& /*area*/,
                               const RunConfig& cfg)
    : field_(field), cfg_(cfg), q_(cfg.params.q), eps_(cfg.eps()) {
  // Initial frontier: the unit circle, uniform markers. The cut starts at
  // angle 0; rotate_cut moves it under the driving.
  const int n0 = std::max(cfg.n_arcs_chain * 4, 4096);
  tip_theta_ = 0.0;
  tip_anchor_ = cplx(1.0, 0.0);
  for (int k = 0; k < n0; ++k) {
    Marker m;
    const double psi = 2.0 * M_PI * (k + 0.5) / n0;
    m.psi = psi;  // stored as angle relative frame: see below (cos/sin of psi - tip_theta_)
    m.anchor = std::polar(1.0, psi);
    m.base = field_.value(m.anchor);
    m.logd = 0.0;
    m.snap_psi = psi;
    m.side = 0;
    markers_.push_back(m);
  }
}

double FrontierEngine::step_angle(double psi, double theta_u, double dt) {
  const double d = wrap_pm(psi - theta_u);
  const double sgn = d >= 0.0 ? 1.0 : -1.0;
  const double cDp = std::exp(-dt) * (1.0 + std::cos(d)) - 1.0;
  return wrap2pi(theta_u + sgn * std::acos(std::clamp(cDp, -1.0, 1.0)));
}

// psi is stored absolutely; delta to the current tip computed on demand.
// (The exact one-step update works on cos/sin of the half-angle.)
void FrontierEngine::step(double theta_u) {
  rotate_cut(theta_u);
  const double dt = cfg_.dt;
  const double edt = std::exp(dt);
  const double em1 = edt - 1.0;
  const double lam2 = std::exp(-dt);

  slit_anchors_.clear();

  for (auto& m : markers_) {
    double d = wrap_pm(m.psi - theta_u);  // in (-pi, pi], never exactly 0
    const double sgn = d >= 0.0 ? 1.0 : -1.0;
    double cD = std::cos(d);
    // log|g'| increment: -1/2 log( (e^dt - c_h^2) / (1 - c_h^2) ),
    // c_h^2 = (1+cos d)/2, written via log1p for stability.
    const double s2h = 0.5 * (1.0 - cD);
    const double x = em1 / std::max(s2h, 1e-300);
    m.logd -= 0.5 * ((x < 1e-3) ? x * (1.0 - x * (0.5 - x / 3.0)) : std::log1p(x));
    // exact angle update: cos d' = e^{-dt} (1 + cos d) - 1
    const double cDp = lam2 * (1.0 + cD) - 1.0;
    const double aDp = std::acos(std::clamp(cDp, -1.0, 1.0));
    m.psi = wrap2pi(theta_u + sgn * aDp);
  }

  insert_slit_markers(theta_u, edt);
  tip_theta_ = theta_u;
  t_ += dt;
  prune(theta_u);
}

void FrontierEngine::rotate_cut(double theta_u) {
  if (markers_.size() < 2) return;
  // The deque is ordered by relative angle above the cut. Well-ordered means
  // rel(front) < rel(back); otherwise the new driving angle fell outside the
  // current cut gap, and the magnitude of rel(front) tells the direction.
  auto rel = [&](const Marker& m) { return wrap2pi(m.psi - theta_u); };
  int guard = 2 * static_cast<int>(markers_.size());
  while (guard-- > 0 && markers_.size() > 1) {
    const double rf = rel(markers_.front());
    const double rb = rel(markers_.back());
    if (rf < rb) break;
    if (rf > M_PI) {
      // cut moved counterclockwise past the front markers
      markers_.push_back(markers_.front());
      markers_.pop_front();
    } else {
      // cut moved clockwise past the back markers
      markers_.push_front(markers_.back());
      markers_.pop_back();
    }
  }
}

void FrontierEngine::insert_slit_markers(double theta_u, double edt) {
  // Pre-step slit: radial segment [r_tip, 1] * e^{i theta_u}; its preimage is
  // the new curve piece. Post-step images: cos(d'/2) = 1/(2 sqrt(x)) with
  // x = e^{dt} k(r) in [1/4, e^{dt}/4].
  const double dt = cfg_.dt;
  const double r_tip = std::real(loewner::slit::k_inv(cplx(std::exp(-dt) / 4.0, 0.0)));
  const double depth = 1.0 - r_tip;

  const cplx u = std::polar(1.0, theta_u);
  constexpr int kSlitMarkers = 5;
  const double radii[kSlitMarkers] = {r_tip + depth * 1e-3, r_tip + depth * 0.12,
                                      r_tip + depth * 0.35, r_tip + depth * 0.60,
                                      r_tip + depth * 0.85};

  struct NewMarker {
    double dpsi;
    double logd;
    cplx anchor;
    double base;
  };
  NewMarker fresh[kSlitMarkers];
  slit_anchors_.push_back(boundary_preimage(theta_u));
  for (int i = 0; i < kSlitMarkers; ++i) {
    const double r = radii[i];
    const cplx w_pre = r * u;
    InvEval ev = eval_inverse(w_pre);
    if (!ev.ok) ++flagged_nodes_;
    NewMarker& nm = fresh[i];
    const double x = edt * std::real(loewner::slit::k(cplx(r, 0.0)));
    const double ch = std::clamp(1.0 / (2.0 * std::sqrt(x)), 0.0, 1.0 - 1e-12);
    nm.dpsi = 2.0 * std::acos(ch);
    // |step'| along the slit: e^dt k'(r) / |k'(e^{i d'})|,
    // |k'(e^{id})| = sin(d/2) / (4 cos^3(d/2)).
    const double kpr = (1.0 - r) / std::pow(1.0 + r, 3.0);
    const double sh = std::sqrt(std::max(1e-300, 1.0 - ch * ch));
    const double kpc = sh / (4.0 * ch * ch * ch);
    const double step_logd = dt + std::log(kpr) - std::log(kpc);
    // log|g'_post(z)| = log|step'(w_pre)| + log|g'_pre(z)|, g'_pre = 1/(g^{-1})'
    nm.logd = step_logd - std::log(std::max(std::abs(ev.dz), 1e-300));
    nm.anchor = ev.z;
    nm.base = field_.value(ev.z);
  }
  // polyline anchors from base (outermost) to tip for the raster
  for (int i = kSlitMarkers - 1; i >= 0; --i) slit_anchors_.push_back(fresh[i].anchor);
  tip_anchor_ = fresh[0].anchor;

  // Insert both prime ends; deque order is ascending in angle relative to the
  // cut, so the left side goes in front (tip innermost first) and the right
  // side at the back (tip innermost last).
  for (int i = kSlitMarkers - 1; i >= 0; --i) {
    Marker L;
    L.psi = wrap2pi(theta_u + fresh[i].dpsi);
    L.logd = fresh[i].logd;
    L.anchor = fresh[i].anchor;
    L.base = fresh[i].base;
    L.snap_psi = L.psi;
    L.side = +1;
    markers_.push_front(L);
  }
  for (int i = kSlitMarkers - 1; i >= 0; --i) {
    Marker R;
    R.psi = wrap2pi(theta_u - fresh[i].dpsi);
    R.logd = fresh[i].logd;
    R.anchor = fresh[i].anchor;
    R.base = fresh[i].base;
    R.snap_psi = R.psi;
    R.side = -1;
    markers_.push_back(R);
  }
  densify_near_tip(theta_u);
}

void FrontierEngine::densify_near_tip(double theta_u) {
  // The flow stretches marker gaps just outside the slit-insertion zone
  // exponentially; refill them by interpolation while the frontier piece is
  // still resolved (anchors closer than a cell).
  const double window = 4.0 * eps_;
  const double max_gap = eps_ / 8.0;
  const double cell = field_.cell_size();
  for (int pass = 0; pass < 2; ++pass) {
    // walk inward from the deque end on one side of the tip
    for (int guard = 0; guard < 64; ++guard) {
      const std::size_t n = markers_.size();
      if (n < 3) break;
      bool inserted = false;
      double covered = 0.0;
      for (std::size_t k = 0; k + 1 < n && covered < window; ++k) {
        const std::size_t i = pass == 0 ? k : n - 1 - k;
        const std::size_t j = pass == 0 ? k + 1 : n - 2 - k;
        const Marker& a = markers_[std::min(i, j)];
        const Marker& b = markers_[std::max(i, j)];
        const double gap = wrap2pi(b.psi - a.psi);
        covered = pass == 0 ? wrap2pi(b.psi - theta_u) : wrap2pi(theta_u - a.psi);
        if (gap <= max_gap || gap > M_PI) continue;
        if (std::abs(a.anchor - b.anchor) > cell) continue;  // unresolved: leave it
        Marker m;
        m.psi = wrap2pi(a.psi + 0.5 * gap);
        m.logd = 0.5 * (a.logd + b.logd);
        m.anchor = 0.5 * (a.anchor + b.anchor);
        m.base = field_.value(m.anchor);
        m.snap_psi = m.psi;
        m.side = a.side == b.side ? a.side : std::int8_t{0};
        markers_.insert(markers_.begin() + static_cast<std::ptrdiff_t>(std::min(i, j)) + 1, m);
        inserted = true;
        break;
      }
      if (!inserted) break;
    }
  }
}

void FrontierEngine::prune(double theta_u) {
  if (markers_.size() < 8) return;
  if ((++prune_counter_ & 63) != 0) return;
  const double protect = 8.0 * std::sqrt(cfg_.dt);
  const double cell = field_.cell_size();
  std::deque<Marker> keep;
  for (std::size_t i = 0; i < markers_.size(); ++i) {
    if (keep.empty()) {
      keep.push_back(markers_[i]);
      continue;
    }
    const Marker& prev = keep.back();
    const Marker& cur = markers_[i];
    const double gap = wrap2pi(cur.psi - prev.psi);
    const double rel = wrap2pi(cur.psi - theta_u);
    const bool near_tip = rel < protect || rel > 2.0 * M_PI - protect;
    const bool same = prev.side == cur.side;
    if (!near_tip && same && gap < eps_ / 48.0 &&
        std::abs(cur.anchor - prev.anchor) < cell / 4.0 && i + 1 < markers_.size()) {
      continue;  // interval resolved by its neighbours
    }
    keep.push_back(cur);
  }
  markers_.swap(keep);
}

double FrontierEngine::boundary_value_at(double psi) const {
  // linear interpolation of the mapped trace between markers
  // mapped value at marker = base + q * log|(g^{-1})'| = base - q * logd
  const std::size_t n = markers_.size();
  if (n == 0) return 0.0;
  // binary search over the circular order using relative angle to the front
  const double ref = markers_.front().psi;
  const double target = wrap2pi(psi - ref);
  std::size_t lo = 0, hi = n;  // first marker with rel >= target
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    const double rel = wrap2pi(markers_[mid].psi - ref);
    if (rel < target) lo = mid + 1; else hi = mid;
  }
  const std::size_t i1 = lo % n;
  const std::size_t i0 = (i1 + n - 1) % n;
  const Marker& a = markers_[i0];
  const Marker& b = markers_[i1];
  const double w = wrap2pi(b.psi - a.psi);
  const double f = w > 1e-15 ? wrap2pi(psi - a.psi) / w : 0.5;
  const double va = a.base - q_ * a.logd;
  const double vb = b.base - q_ * b.logd;
  return va + std::clamp(f, 0.0, 1.0) * (vb - va);
}

cplx FrontierEngine::boundary_preimage(double psi, bool* resolution_limited) const {
  const std::size_t n = markers_.size();
  const double ref = markers_.front().psi;
  const double target = wrap2pi(psi - ref);
  std::size_t lo = 0, hi = n;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    const double rel = wrap2pi(markers_[mid].psi - ref);
    if (rel < target) lo = mid + 1; else hi = mid;
  }
  const std::size_t i1 = lo % n;
  const std::size_t i0 = (i1 + n - 1) % n;
  const Marker& a = markers_[i0];
  const Marker& b = markers_[i1];
  const double w = wrap2pi(b.psi - a.psi);
  const double f = w > 1e-15 ? std::clamp(wrap2pi(psi - a.psi) / w, 0.0, 1.0) : 0.5;
  if (resolution_limited)
    *resolution_limited = std::abs(a.anchor - b.anchor) > 2.0 * field_.cell_size();
  return a.anchor + f * (b.anchor - a.anchor);
}

FrontierEngine::InvEval FrontierEngine::eval_inverse(cplx w) const {
  InvEval out;
  const std::size_t n = markers_.size();
  const double aw = std::abs(w);
  const double d = std::max(1.0 - aw, 1e-9);
  const double phi = std::atan2(w.imag(), w.real());

  // Normalized Poisson sum over the whole circle (the boundary data varies at
  // order one, so truncating the kernel tail is not an option); stride
  // doubling coarsens the far field where the kernel is smooth.
  const double ref = markers_.front().psi;
  const double target = wrap2pi(phi - ref);
  std::size_t lo = 0, hi = n;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    const double rel = wrap2pi(markers_[mid].psi - ref);
    if (rel < target) lo = mid + 1; else hi = mid;
  }
  const std::size_t center = lo % std::max<std::size_t>(n, 1);

  cplx S(0.0, 0.0), Sz(0.0, 0.0), Sd(0.0, 0.0), Szd(0.0, 0.0);
  const double onemw2 = std::max(1.0 - aw * aw, 1e-15);
  const cplx wbar = std::conj(w);

  auto accumulate = [&](std::size_t idx, double tau) {
    const Marker& m = markers_[idx];
    const cplx e = std::polar(1.0, m.psi);
    const cplx D = e - w;
    const double den = std::norm(D);
    const double P = onemw2 / std::max(den, 1e-30);
    // Wirtinger d/dw P = P (-wbar/(1-|w|^2) + 1/D)
    const cplx dP = P * (-wbar / onemw2 + 1.0 / D);
    S += tau * P;
    Sz += tau * P * m.anchor;
    Sd += tau * dP;
    Szd += tau * dP * m.anchor;
  };

  double covered_fwd = 0.0, covered_bwd = 0.0;
  std::size_t stride = 1;
  std::size_t steps_at_stride = 0;
  std::size_t i_fwd = center, i_bwd = (center + n - 1) % n;
  std::size_t taps = 0;
  const std::size_t max_taps = 2 * n + 16;
  while ((covered_fwd < M_PI || covered_bwd < M_PI) && taps < max_taps) {
    if (covered_fwd < M_PI) {
      std::size_t nxt = (i_fwd + stride) % n;
      double gap = wrap2pi(markers_[nxt].psi - markers_[i_fwd].psi);
      if (covered_fwd + gap > M_PI) gap = M_PI - covered_fwd;
      accumulate(i_fwd, std::max(gap, 1e-12));
      covered_fwd += gap;
      i_fwd = nxt;
      ++taps;
    }
    if (covered_bwd < M_PI) {
      std::size_t prv = (i_bwd + n - stride) % n;
      double gap = wrap2pi(markers_[i_bwd].psi - markers_[prv].psi);
      if (covered_bwd + gap > M_PI) gap = M_PI - covered_bwd;
      accumulate(i_bwd, std::max(gap, 1e-12));
      covered_bwd += gap;
      i_bwd = prv;
      ++taps;
    }
    ++steps_at_stride;
    const double near = std::min(covered_fwd, covered_bwd);
    if (near > 8.0 * d && steps_at_stride >= 16 && stride < n / 8) {
      stride *= 2;
      steps_at_stride = 0;
    }
  }

  if (std::abs(S) < 1e-12) {
    out.ok = false;
    out.z = w;
    out.dz = cplx(1.0, 0.0);
    return out;
  }
  out.z = Sz / S;
  out.dz = (Szd * S - Sz * Sd) / (S * S);
  return out;
}

double FrontierEngine::pullback_value(cplx w, bool* flagged) const {
  const double d = 1.0 - std::abs(w);
  // local marker gap near the angle
  bool flag = false;
  double v;
  if (d < 0.25 * eps_ / 6.0) {
    v = boundary_value_at(std::atan2(w.imag(), w.real()));
  } else {
    InvEval ev = eval_inverse(w);
    if (!ev.ok) {
      flag = true;
      v = boundary_value_at(std::atan2(w.imag(), w.real()));
    } else {
      v = field_.value(ev.z) + q_ * std::log(std::max(std::abs(ev.dz), 1e-300));
    }
  }
  if (flagged) *flagged = flag;
  if (flag) ++flagged_nodes_;
  return v;
}

Eigen::ArrayXd FrontierEngine::measure_arcs(double b, int n_arcs, int quad_nodes) const {
  Eigen::ArrayXd masses(n_arcs);
  const double arclen = 2.0 * M_PI / n_arcs;
  const double pref = std::pow(eps_, b * b / 4.0) * arclen;
  const double half = M_PI / 2.0 - std::asin(std::min(1.0, eps_ * 0.5));
  const int half_nodes = std::max(quad_nodes / 2, 2);
  for (int j = 0; j < n_arcs; ++j) {
    const double th = (j + 0.5) * arclen;
    const cplx x = std::polar(1.0, th);
    double acc = 0.0, wsum = 0.0;
    for (int hswitch = 0; hswitch < 2; ++hswitch) {
      for (int k = 0; k < half_nodes && k < kG8; ++k) {
        const double tgl = hswitch == 0 ? -kG8x[k] : kG8x[k];
        const double phiq = th + (M_PI - half) + (tgl + 1.0) * 0.5 * (2.0 * half);
        const cplx p = x + std::polar(eps_, phiq);
        acc += kG8w[k] * pullback_value(p, nullptr);
        wsum += kG8w[k];
      }
    }
    masses(j) = pref * std::exp(0.5 * b * (acc / wsum));
  }
  return masses;
}

FrontierEngine::LengthMeasurement FrontierEngine::measure_length(int n_arcs,
                                                                 int quad_nodes) const {
  LengthMeasurement out;
  const Eigen::ArrayXd masses = measure_arcs(cfg_.params.gamma, n_arcs, quad_nodes);
  out.total = masses.sum();
  // side attribution by marker-interval width within each arc
  const double arclen = 2.0 * M_PI / n_arcs;
  const std::size_t n = markers_.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Marker& a = markers_[i];
    const Marker& bm = markers_[i + 1];
    if (a.side == 0 || a.side != bm.side) continue;
    const double start = wrap2pi(a.psi);
    double span = wrap2pi(bm.psi - a.psi);
    if (span <= 0.0 || span > M_PI) continue;
    int arc = static_cast<int>(start / arclen) % n_arcs;
    double off = start - arc * arclen;
    while (span > 1e-15) {
      const double take = std::min(span, arclen - off);
      const double frac = take / arclen;
      if (a.side > 0) out.side_left += masses(arc) * frac;
      else out.side_right += masses(arc) * frac;
      span -= take;
      off = 0.0;
      arc = (arc + 1) % n_arcs;
    }
  }
  return out;
}

double FrontierEngine::window_mass(double a, double b, int quad_nodes) const {
  // measured over canonical arcs covering [a,b] (image angles, ccw from a to b)
  const int n_arcs = cfg_.n_arcs_chain;
  const double arclen = 2.0 * M_PI / n_arcs;
  const double span = wrap2pi(b - a);
  if (span <= 0.0) return 0.0;
  const double pref = std::pow(eps_, cfg_.params.gamma * cfg_.params.gamma / 4.0);
  const double half = M_PI / 2.0 - std::asin(std::min(1.0, eps_ * 0.5));
  const double start = wrap2pi(a);
  double mass = 0.0;
  int arc = static_cast<int>(start / arclen) % n_arcs;
  double off = start - arc * arclen;
  double left = span;
  while (left > 1e-15) {
    const double take = std::min(left, arclen - off);
    const double th = arc * arclen + 0.5 * arclen;
    const cplx x = std::polar(1.0, th);
    double acc = 0.0, wsum = 0.0;
    for (int hswitch = 0; hswitch < 2; ++hswitch) {
      for (int k = 0; k < std::max(quad_nodes / 2, 2) && k < kG8; ++k) {
        const double tgl = hswitch == 0 ? -kG8x[k] : kG8x[k];
        const double phiq = th + (M_PI - half) + (tgl + 1.0) * 0.5 * (2.0 * half);
        acc += kG8w[k] * pullback_value(x + std::polar(eps_, phiq), nullptr);
        wsum += kG8w[k];
      }
    }
    mass += pref * take * std::exp(0.5 * cfg_.params.gamma * (acc / wsum));
    left -= take;
    off = 0.0;
    arc = (arc + 1) % n_arcs;
  }
  return mass;
}

void FrontierEngine::snapshot_angles() {
  for (auto& m : markers_) m.snap_psi = m.psi;
}

double FrontierEngine::drop_interval(double lo, double hi) {
  // Measures the window, then removes markers whose angles lie in (lo, hi).
  const double mass = window_mass(lo, hi, cfg_.quad_chain);
  const double span = wrap2pi(hi - lo);
  std::deque<Marker> keep;
  for (const auto& m : markers_) {
    const double rel = wrap2pi(m.psi - lo);
    if (rel > 1e-15 && rel < span) continue;
    keep.push_back(m);
  }
  markers_.swap(keep);
  return mass;
}

}  // namespace lqg::qle
