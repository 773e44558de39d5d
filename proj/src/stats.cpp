#include "lqg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lqg/gmc.hpp"

namespace lqg::stats {

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

double effective_sample_size(const std::vector<double>& w) {
  double s = 0.0, s2 = 0.0;
  for (double x : w) {
    s += x;
    s2 += x * x;
  }
  return s2 > 0.0 ? s * s / s2 : 0.0;
}

namespace {

struct WPoint {
  double x;
  double w;
  int which;
};

double ks_from_sorted(std::vector<WPoint>& pts, double W1, double W2) {
  std::sort(pts.begin(), pts.end(), [](const WPoint& a, const WPoint& b) { return a.x < b.x; });
  double c1 = 0.0, c2 = 0.0, d = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].which == 0) c1 += pts[i].w;
    else c2 += pts[i].w;
    if (i + 1 < pts.size() && pts[i + 1].x == pts[i].x) continue;
    d = std::max(d, std::abs(c1 / W1 - c2 / W2));
  }
  return d;
}

}  // namespace

double weighted_ks(const std::vector<double>& x1, const std::vector<double>& w1,
                   const std::vector<double>& x2, const std::vector<double>& w2) {
  std::vector<WPoint> pts;
  pts.reserve(x1.size() + x2.size());
  double W1 = 0.0, W2 = 0.0;
  for (std::size_t i = 0; i < x1.size(); ++i) {
    pts.push_back({x1[i], w1[i], 0});
    W1 += w1[i];
  }
  for (std::size_t i = 0; i < x2.size(); ++i) {
    pts.push_back({x2[i], w2[i], 1});
    W2 += w2[i];
  }
  if (W1 <= 0.0 || W2 <= 0.0) return 1.0;
  return ks_from_sorted(pts, W1, W2);
}

double ks_bootstrap_p(const std::vector<double>& x1, const std::vector<double>& w1,
                      const std::vector<double>& x2, const std::vector<double>& w2,
                      int n_boot, Rng& rng) {
  const double d_obs = weighted_ks(x1, w1, x2, w2);
  // pooled weighted resampling under the null
  std::vector<double> px, pw;
  px.reserve(x1.size() + x2.size());
  for (std::size_t i = 0; i < x1.size(); ++i) {
    px.push_back(x1[i]);
    pw.push_back(w1[i]);
  }
  for (std::size_t i = 0; i < x2.size(); ++i) {
    px.push_back(x2[i]);
    pw.push_back(w2[i]);
  }
  std::vector<double> cdf(pw.size());
  std::partial_sum(pw.begin(), pw.end(), cdf.begin());
  const double tot = cdf.back();
  auto draw = [&]() {
    const double u = rng.uniform() * tot;
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    return px[static_cast<std::size_t>(it - cdf.begin())];
  };
  int exceed = 0;
  std::vector<double> b1(x1.size()), b2(x2.size());
  const std::vector<double> u1(x1.size(), 1.0), u2(x2.size(), 1.0);
  for (int b = 0; b < n_boot; ++b) {
    for (auto& v : b1) v = draw();
    for (auto& v : b2) v = draw();
    if (weighted_ks(b1, u1, b2, u2) >= d_obs) ++exceed;
  }
  return (exceed + 1.0) / (n_boot + 1.0);
}

double hill_estimator(std::vector<double> x, double top_fraction) {
  std::sort(x.begin(), x.end(), std::greater<>());
  const int k = std::max(2, static_cast<int>(top_fraction * x.size()));
  if (static_cast<int>(x.size()) <= k) throw InsufficientData("hill: sample too small");
  const double xk = x[k];
  if (!(xk > 0.0)) throw InsufficientData("hill: nonpositive threshold");
  double s = 0.0;
  for (int i = 0; i < k; ++i) s += std::log(x[i] / xk);
  return k / s;
}

double ols_slope(const std::vector<double>& x, const std::vector<double>& y,
                 double* intercept) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) throw InsufficientData("ols: degenerate predictor");
  const double b = sxy / sxx;
  if (intercept) *intercept = my - b * mx;
  return b;
}

// ---------------------------------------------------------------------------

TestReport test_bm_boundary(const std::vector<GrowthTrace>& traces, double kappa,
                            int min_surviving) {
  TestReport rep;
  rep.name = "bm_boundary_variance";
  rep.target = 4.0 * std::tan(2.0 * M_PI / kappa);
  rep.tolerance = 0.15;

  if (traces.empty()) throw InsufficientData("no traces");
  // horizon = largest s with enough survivors (data-sufficiency gate)
  std::vector<double> durations;
  for (const auto& tr : traces) durations.push_back(tr.duration_s);
  std::sort(durations.begin(), durations.end(), std::greater<>());
  if (static_cast<int>(durations.size()) < min_surviving)
    throw InsufficientData("fewer traces than the survivor floor");
  const double horizon = durations[min_surviving - 1];
  if (!(horizon > 0.0)) throw InsufficientData("degenerate horizon");

  // E[X^2] = sigma^2 lag, fitted through the origin over disjoint blocks of
  // recorded samples (a resampling grid would correlate adjacent increments
  // and shrink the variance). Blocks enter when they start well off the
  // absorbing barrier; conditioning on the current value is harmless for a
  // Markov process, conditioning on global survival is not.
  const double barrier_buffer = 0.6;
  double num = 0.0, den = 0.0;
  std::vector<double> z1;  // standardized lag-1 increments
  std::vector<double> z1_next;
  std::vector<double> z1_w;
  std::size_t n_incs = 0;

  for (const int m : {1, 2, 4, 8}) {
    for (const auto& tr : traces) {
      const double w = tr.weight;
      const auto& v = tr.samples;
      std::vector<double> zs;
      for (std::size_t j = 0; j + m < v.size(); j += m) {
        if (v[j].s >= horizon) break;
        if (v[j].L < barrier_buffer) continue;
        const double lag = v[j + m].s - v[j].s;
        if (!(lag > 0.0)) continue;
        const double x = v[j + m].L - v[j].L;
        num += w * x * x;
        den += w * lag;
        ++n_incs;
        if (m == 1) zs.push_back(x / std::sqrt(lag));
      }
      if (m == 1) {
        for (std::size_t k = 0; k + 1 < zs.size(); ++k) {
          z1.push_back(zs[k]);
          z1_next.push_back(zs[k + 1]);
          z1_w.push_back(w);
        }
      }
    }
  }
  if (den <= 0.0) throw InsufficientData("no usable increments");
  rep.statistic = num / den;
  rep.n_samples = static_cast<int>(n_incs);
  std::vector<double> trace_w;
  for (const auto& tr : traces) trace_w.push_back(tr.weight);
  rep.effective_sample_size = effective_sample_size(trace_w);

  // side checks: increment mean ~ 0 and lag-1 autocorrelation ~ 0 at 3 sigma
  double sw = 0.0, swx = 0.0, swx2 = 0.0, swxy = 0.0, swy = 0.0, swy2 = 0.0;
  for (std::size_t i = 0; i < z1.size(); ++i) {
    sw += z1_w[i];
    swx += z1_w[i] * z1[i];
    swx2 += z1_w[i] * z1[i] * z1[i];
    swy += z1_w[i] * z1_next[i];
    swy2 += z1_w[i] * z1_next[i] * z1_next[i];
    swxy += z1_w[i] * z1[i] * z1_next[i];
  }
  if (sw <= 0.0) throw InsufficientData("no lag-1 increments");
  const double mx = swx / sw, my = swy / sw;
  const double vx = std::max(swx2 / sw - mx * mx, 1e-300);
  const double vy = std::max(swy2 / sw - my * my, 1e-300);
  const double ess1 = effective_sample_size(z1_w);
  const double mean_z = mx / std::sqrt(vx / std::max(ess1, 1.0));
  const double corr = (swxy / sw - mx * my) / std::sqrt(vx * vy);
  const double corr_z = corr * std::sqrt(std::max(ess1, 1.0));

  const bool slope_ok = std::abs(rep.statistic / rep.target - 1.0) <= rep.tolerance;
  const bool mean_ok = std::abs(mean_z) <= 3.0;
  const bool corr_ok = std::abs(corr_z) <= 3.0;
  std::ostringstream os;
  os << "slope=" << rep.statistic << " target=" << rep.target << " mean_z=" << mean_z
     << " lag1_corr_z=" << corr_z << " horizon=" << horizon;
  rep.detail = os.str();
  rep.verdict = (slope_ok && mean_ok && corr_ok) ? Verdict::Pass : Verdict::Fail;
  if (rep.effective_sample_size < 0.1 * traces.size()) rep.verdict = Verdict::Inconclusive;
  return rep;
}

TestReport test_affine_boundary(const std::vector<GrowthTrace>& traces,
                                double arc_median_target) {
  TestReport rep;
  rep.name = "affine_boundary";
  rep.target = 0.0;
  rep.tolerance = 1e-9;
  if (traces.empty()) throw InsufficientData("no traces");
  double max_resid = 0.0;
  std::vector<double> side;
  for (const auto& tr : traces) {
    for (const auto& ts : tr.samples) {
      max_resid = std::max(max_resid, std::abs(ts.L - 1.0 - 2.0 * ts.s));
      if (ts.s > 0.0) side.push_back(ts.side_discrepancy);
    }
  }
  rep.statistic = max_resid;
  rep.n_samples = static_cast<int>(traces.size());
  rep.effective_sample_size = static_cast<double>(traces.size());
  double med = 0.0;
  if (!side.empty()) {
    std::nth_element(side.begin(), side.begin() + side.size() / 2, side.end());
    med = side[side.size() / 2];
  }
  std::ostringstream os;
  os << "max|L-1-2s|=" << max_resid << " arc_median=" << med
     << " arc_target=" << arc_median_target;
  rep.detail = os.str();
  rep.verdict = (max_resid <= rep.tolerance && med < arc_median_target) ? Verdict::Pass
                                                                        : Verdict::Fail;
  return rep;
}

TestReport test_levy_jumps(const std::vector<double>& jumps, double gamma, double eps_count,
                           int min_jumps) {
  TestReport rep;
  rep.name = "levy_jump_tail";
  rep.target = 4.0 / (gamma * gamma);
  rep.tolerance = 0.20;
  std::vector<double> pool;
  for (double j : jumps)
    if (j >= eps_count) pool.push_back(j);
  rep.n_samples = static_cast<int>(pool.size());
  rep.effective_sample_size = static_cast<double>(pool.size());
  if (rep.n_samples < min_jumps) throw InsufficientData("fewer pooled jumps than required");
  rep.statistic = hill_estimator(pool, 0.2);
  // threshold sensitivity
  std::ostringstream os;
  os << "hill20=" << rep.statistic;
  for (double f : {0.10, 0.15, 0.30}) {
    try {
      os << " hill" << static_cast<int>(f * 100) << "=" << hill_estimator(pool, f);
    } catch (const InsufficientData&) {
    }
  }
  rep.detail = os.str();
  rep.verdict = std::abs(rep.statistic / rep.target - 1.0) <= rep.tolerance ? Verdict::Pass
                                                                            : Verdict::Fail;
  return rep;
}

TestReport test_stationarity(const ObservableSet& at0, const ObservableSet& at1,
                             std::uint64_t seed, double p_threshold, int n_boot) {
  TestReport rep;
  rep.name = "stationarity_ks";
  rep.target = p_threshold;
  rep.tolerance = 0.0;
  if (at0.obs.empty() || at0.obs.size() != at1.obs.size())
    throw InsufficientData("observable sets empty or mismatched");
  const int K = static_cast<int>(at0.obs.size());
  rep.n_samples = static_cast<int>(at0.weights.size() + at1.weights.size());
  const double ess0 = effective_sample_size(at0.weights);
  const double ess1 = effective_sample_size(at1.weights);
  rep.effective_sample_size = std::min(ess0, ess1);

  Rng rng(Rng::mix(seed));
  double min_p = 1.0;
  std::ostringstream os;
  for (int k = 0; k < K; ++k) {
    const double p =
        ks_bootstrap_p(at0.obs[k], at0.weights, at1.obs[k], at1.weights, n_boot, rng);
    min_p = std::min(min_p, p);
    os << (k ? " " : "") << (k < static_cast<int>(at0.names.size()) ? at0.names[k] : "obs")
       << ":p=" << p;
  }
  rep.p_value = std::min(1.0, min_p * K);  // Bonferroni
  rep.statistic = rep.p_value;
  rep.detail = os.str();
  rep.verdict = rep.p_value > p_threshold ? Verdict::Pass : Verdict::Fail;
  if (rep.effective_sample_size <
      0.1 * std::min(at0.weights.size(), at1.weights.size()))
    rep.verdict = Verdict::Inconclusive;
  return rep;
}

TestReport test_dbm_exponent(const std::vector<gff::FieldSample>& fields,
                             const ParamSet& params, int n_intervals, double eps,
                             int min_fields) {
  TestReport rep;
  rep.name = "dbm_exponent";
  rep.target = params.eta;
  rep.tolerance = 0.10;
  if (static_cast<int>(fields.size()) < min_fields)
    throw InsufficientData("not enough fields");

  std::vector<double> lx, ly;
  const int fine = 8 * n_intervals;
  for (const auto& f : fields) {
    const auto gm = gmc::boundary_measure(f, params.gamma, eps, fine);
    const auto bm = gmc::boundary_measure(f, params.beta, eps, fine);
    const double total = gm.total();
    if (!(total > 0.0)) continue;
    const double target_mass = total / n_intervals;
    if (!(target_mass > 0.0)) continue;
    // walk the fine arcs accumulating equal gamma-mass intervals
    std::vector<double> fx, fy;
    double acc = 0.0, bacc = 0.0, len = 0.0;
    const double w = gm.arc_width();
    for (int j = 0; j < fine; ++j) {
      double arc_g = gm.arc_masses(j);
      double arc_b = bm.arc_masses(j);
      double arc_len = w;
      while (acc + arc_g >= target_mass) {
        const double frac = (target_mass - acc) / arc_g;
        bacc += arc_b * frac;
        len += arc_len * frac;
        if (bacc > 0.0 && len > 0.0) {
          fx.push_back(std::log(len / (2.0 * M_PI)));  // harmonic measure from 0
          fy.push_back(std::log(bacc));
        }
        arc_b *= (1.0 - frac);
        arc_len *= (1.0 - frac);
        arc_g -= (target_mass - acc);
        acc = 0.0;
        bacc = 0.0;
        len = 0.0;
      }
      acc += arc_g;
      bacc += arc_b;
      len += arc_len;
    }
    if (fx.size() < 4) continue;
    // per-field centring removes field-level scale offsets
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < fx.size(); ++i) {
      mx += fx[i];
      my += fy[i];
    }
    mx /= fx.size();
    my /= fy.size();
    for (std::size_t i = 0; i < fx.size(); ++i) {
      lx.push_back(fx[i] - mx);
      ly.push_back(fy[i] - my);
    }
  }
  rep.n_samples = static_cast<int>(lx.size());
  rep.effective_sample_size = static_cast<double>(lx.size());
  if (lx.size() < 16) throw InsufficientData("too few intervals");
  double sxx = 0.0;
  {
    double mx = 0.0;
    for (double v : lx) mx += v;
    mx /= lx.size();
    for (double v : lx) sxx += (v - mx) * (v - mx);
  }
  if (sxx < 1e-12) {
    rep.verdict = Verdict::Inconclusive;
    rep.detail = "degenerate predictor (all interval lengths equal)";
    return rep;
  }
  rep.statistic = ols_slope(lx, ly);
  std::ostringstream os;
  os << "slope=" << rep.statistic << " eta=" << params.eta
     << " intervals=" << lx.size();
  rep.detail = os.str();
  rep.verdict = std::abs(rep.statistic - rep.target) <= rep.tolerance ? Verdict::Pass
                                                                      : Verdict::Fail;
  return rep;
}

TestReport test_phase_area(const std::vector<GrowthTrace>& traces, Phase phase) {
  TestReport rep;
  rep.name = std::string("phase_area_") + phase_name(phase);
  if (traces.empty()) throw InsufficientData("no traces");
  rep.n_samples = static_cast<int>(traces.size());
  rep.effective_sample_size = static_cast<double>(traces.size());
  std::ostringstream os;
  if (phase == Phase::Dilute) {
    int ok = 0;
    for (const auto& tr : traces) {
      const double a = tr.samples.empty() ? 0.0 : tr.samples.back().A_pockets;
      if (a <= 2.0 * tr.mean_cell_mass) ++ok;
    }
    rep.statistic = static_cast<double>(ok) / traces.size();
    rep.target = 0.95;
    rep.tolerance = 0.0;
    os << "fraction_within_2_cells=" << rep.statistic;
    rep.verdict = rep.statistic >= rep.target ? Verdict::Pass : Verdict::Fail;
  } else if (phase == Phase::SpaceFilling) {
    double max_resid = 0.0;
    int cover_ok = 0, cover_n = 0;
    for (const auto& tr : traces) {
      for (const auto& ts : tr.samples)
        max_resid = std::max(max_resid, std::abs(ts.A_explored - ts.s));
      if (!tr.budget_exhausted) {
        ++cover_n;
        if (tr.terminal_live_mass <= 2.0 * tr.mean_cell_mass) ++cover_ok;
      }
    }
    rep.statistic = max_resid;
    rep.target = 0.0;
    rep.tolerance = 1e-9;
    const double cover = cover_n > 0 ? static_cast<double>(cover_ok) / cover_n : 0.0;
    os << "max|A-s|=" << max_resid << " coverage_fraction=" << cover;
    rep.verdict =
        (max_resid <= rep.tolerance && cover >= 0.95) ? Verdict::Pass : Verdict::Fail;
  } else {
    // swallowing: area growth outside events <= 5%, and the record partition
    // closes to the total area within one cell mass
    double outside = 0.0, denom = 0.0;
    double worst_closure = 0.0;
    for (const auto& tr : traces) {
      double rec_sum = 0.0;
      for (const auto& r : tr.swallow_records) rec_sum += r.area;
      worst_closure =
          std::max(worst_closure, std::abs(rec_sum - (tr.total_area - 0.0)) /
                                      std::max(tr.mean_cell_mass, 1e-300));
      outside += tr.footprint_mass;
      denom += tr.total_area - tr.terminal_live_mass;
    }
    rep.statistic = denom > 0.0 ? outside / denom : 1.0;
    rep.target = 0.05;
    rep.tolerance = 0.0;
    os << "outside_fraction=" << rep.statistic << " worst_closure_cells=" << worst_closure;
    rep.verdict =
        (rep.statistic <= rep.target && worst_closure <= 1.0) ? Verdict::Pass : Verdict::Fail;
  }
  rep.detail = os.str();
  return rep;
}

TestReport test_jump_reconcile(const std::vector<GrowthTrace>& traces, double eps_count,
                               double median_target) {
  TestReport rep;
  rep.name = "jump_reconcile";
  rep.target = median_target;
  std::vector<double> rel_err;
  for (const auto& tr : traces) {
    for (const auto& r : tr.swallow_records) {
      if (r.terminal || r.jump < eps_count) continue;
      // bracket the event time in the samples
      const auto& v = tr.samples;
      auto it = std::lower_bound(v.begin(), v.end(), r.t,
                                 [](const qle::TraceSample& a, double b) { return a.t < b; });
      if (it == v.begin() || it == v.end()) continue;
      const double drop = (it - 1)->L - it->L;
      if (drop <= 0.0) {
        rel_err.push_back(1.0);
        continue;
      }
      rel_err.push_back(std::abs(r.jump - drop) / r.jump);
    }
  }
  rep.n_samples = static_cast<int>(rel_err.size());
  rep.effective_sample_size = static_cast<double>(rel_err.size());
  if (rel_err.size() < 8) throw InsufficientData("too few resolvable jumps");
  std::nth_element(rel_err.begin(), rel_err.begin() + rel_err.size() / 2, rel_err.end());
  rep.statistic = rel_err[rel_err.size() / 2];
  std::ostringstream os;
  os << "median_rel_err=" << rep.statistic << " n=" << rel_err.size();
  rep.detail = os.str();
  rep.verdict = rep.statistic < median_target ? Verdict::Pass : Verdict::Fail;
  return rep;
}

TestReport diag_disk_scaling(const std::vector<SwallowRecord>& registry,
                             std::uint64_t seed) {
  TestReport rep;
  rep.name = "disk_scaling_diagnostic";
  rep.target = 2.0;
  rep.verdict = Verdict::Inconclusive;  // non-gating
  std::vector<const SwallowRecord*> recs;
  for (const auto& r : registry)
    if (!r.terminal && r.jump > 0.0 && r.area > 0.0) recs.push_back(&r);
  rep.n_samples = static_cast<int>(recs.size());
  if (recs.size() < 24) {
    rep.detail = "insufficient records";
    return rep;
  }
  auto slope_of = [&](const std::vector<const SwallowRecord*>& rs) -> double {
    // log-binned medians of area vs jump
    std::vector<std::pair<double, double>> pts;
    for (auto* r : rs) pts.push_back({std::log(r->jump), std::log(r->area)});
    std::sort(pts.begin(), pts.end());
    const int nbin = 6;
    std::vector<double> bx, by;
    const std::size_t per = pts.size() / nbin;
    for (int b = 0; b < nbin; ++b) {
      const std::size_t lo = b * per, hi = (b + 1 == nbin) ? pts.size() : (b + 1) * per;
      if (hi - lo < 2) continue;
      std::vector<double> ys;
      double mx = 0.0;
      for (std::size_t i = lo; i < hi; ++i) {
        ys.push_back(pts[i].second);
        mx += pts[i].first;
      }
      std::nth_element(ys.begin(), ys.begin() + ys.size() / 2, ys.end());
      bx.push_back(mx / (hi - lo));
      by.push_back(ys[ys.size() / 2]);
    }
    return ols_slope(bx, by);
  };
  rep.statistic = slope_of(recs);
  // bootstrap CI
  Rng rng(Rng::mix(seed));
  std::vector<double> boots;
  for (int b = 0; b < 200; ++b) {
    std::vector<const SwallowRecord*> rs(recs.size());
    for (auto& p : rs) p = recs[static_cast<std::size_t>(rng.uniform() * recs.size())];
    try {
      boots.push_back(slope_of(rs));
    } catch (const InsufficientData&) {
    }
  }
  std::sort(boots.begin(), boots.end());
  std::ostringstream os;
  os << "slope=" << rep.statistic;
  if (boots.size() > 20)
    os << " ci=[" << boots[boots.size() / 40] << "," << boots[boots.size() - 1 - boots.size() / 40]
       << "]";
  rep.detail = os.str();
  return rep;
}

}  // namespace lqg::stats
