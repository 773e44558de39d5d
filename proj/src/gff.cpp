#include "lqg/gff.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Cholesky>

#include "lqg/rng.hpp"

namespace lqg::gff {

namespace {

struct CellList {
  std::vector<int> idx;           // linear indices of in-disk cells
  std::vector<double> radius;     // per cell
  std::vector<double> theta;
  std::vector<int> radius_id;     // into sorted distinct radii (descending)
  std::vector<double> radii;      // distinct, descending
};

CellList collect_cells(int res) {
  CellList c;
  const double h = 2.0 / res;
  std::map<long long, int> rkey;  // quantized r^2 -> slot (filled later)
  std::vector<double> raw_r;
  for (int iy = 0; iy < res; ++iy) {
    for (int ix = 0; ix < res; ++ix) {
      const double x = -1.0 + (ix + 0.5) * h;
      const double y = -1.0 + (iy + 0.5) * h;
      const double r2 = x * x + y * y;
      if (r2 >= 1.0) continue;
      c.idx.push_back(iy * res + ix);
      c.radius.push_back(std::sqrt(r2));
      c.theta.push_back(std::atan2(y, x));
      raw_r.push_back(std::sqrt(r2));
    }
  }
  // distinct radii, descending
  std::vector<double> sorted = raw_r;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  sorted.erase(std::unique(sorted.begin(), sorted.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-14; }),
               sorted.end());
  c.radii = sorted;
  c.radius_id.resize(c.idx.size());
  for (std::size_t i = 0; i < c.idx.size(); ++i) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), c.radius[i], std::greater<>());
    int id = static_cast<int>(it - sorted.begin());
    if (id == static_cast<int>(sorted.size()) ||
        std::abs(sorted[id] - c.radius[i]) > 1e-13) {
      id = static_cast<int>(it - sorted.begin()) - 1;
    }
    c.radius_id[i] = id;
  }
  return c;
}

// Radial Dirichlet-mode processes sampled exactly on a descending radius list.
// Mode m >= 1 has covariance C_m(u,v) = ((u/v)^m - (uv)^m)/(2m) for u <= v;
// the transition down the list is AR(1) with gain (u/v)^m and innovation
// variance (1 - (u/v)^{2m})/(2m). Mode 0 is Brownian motion in -log r.
void sample_radial_modes(const std::vector<double>& radii, int m_max, Rng& rng,
                         Eigen::ArrayXXd& A, Eigen::ArrayXXd& B, Eigen::ArrayXd& A0) {
  const int nr = static_cast<int>(radii.size());
  A.setZero(m_max + 1, nr);
  B.setZero(m_max + 1, nr);
  A0.setZero(nr);
  // m = 0
  double prev = 0.0, prev_logr = 0.0;
  for (int k = 0; k < nr; ++k) {
    const double lr = -std::log(radii[k]);
    prev += std::sqrt(std::max(0.0, lr - prev_logr)) * rng.normal();
    prev_logr = lr;
    A0(k) = prev;
  }
  for (int m = 1; m <= m_max; ++m) {
    double va = 0.0, vb = 0.0;
    double v_prev = radii[0];
    {
      const double var0 = (1.0 - std::pow(v_prev, 2 * m)) / (2.0 * m);
      va = std::sqrt(std::max(0.0, var0)) * rng.normal();
      vb = std::sqrt(std::max(0.0, var0)) * rng.normal();
      A(m, 0) = va;
      B(m, 0) = vb;
    }
    for (int k = 1; k < nr; ++k) {
      const double u = radii[k];
      const double gain = std::exp(m * (std::log(u) - std::log(v_prev)));
      const double s2 = (1.0 - gain * gain) / (2.0 * m);
      const double s = std::sqrt(std::max(0.0, s2));
      va = gain * va + s * rng.normal();
      vb = gain * vb + s * rng.normal();
      A(m, k) = va;
      B(m, k) = vb;
      v_prev = u;
    }
  }
}

FieldSample sample_modes(const GffConfig& cfg, std::uint64_t seed) {
  FieldSample f;
  f.res = cfg.res;
  f.n_modes = cfg.n_modes;
  f.seed = seed;
  f.grid.setZero(cfg.res, cfg.res);
  Rng rng(Rng::mix(seed));

  f.mode_a.resize(cfg.n_modes);
  f.mode_b.resize(cfg.n_modes);
  for (int n = 0; n < cfg.n_modes; ++n) {
    f.mode_a(n) = rng.normal();
    f.mode_b(n) = rng.normal();
  }

  const int m_bulk = cfg.bulk_modes > 0 ? cfg.bulk_modes
                                        : std::min(512, 2 * cfg.res);
  CellList cells = collect_cells(cfg.res);
  Eigen::ArrayXXd A, B;
  Eigen::ArrayXd A0;
  sample_radial_modes(cells.radii, m_bulk, rng, A, B, A0);

  // Per-radius harmonic-extension coefficients of the boundary trace:
  // sqrt(2/n) r^n, truncated where r^n underflows.
  const double sqrt2 = std::sqrt(2.0);
  for (std::size_t i = 0; i < cells.idx.size(); ++i) {
    const int rid = cells.radius_id[i];
    const double r = cells.radii[rid];
    const double th = cells.theta[i];
    const cplx e(std::cos(th), std::sin(th));
    double acc = A0(rid);
    // Dirichlet angular modes
    cplx em = e;
    for (int m = 1; m <= m_bulk; ++m) {
      acc += sqrt2 * (A(m, rid) * em.real() + B(m, rid) * em.imag());
      em *= e;
    }
    // boundary trace extension
    const double logr = std::log(std::max(r, 1e-300));
    const int n_eff = (r < 1e-12) ? 0
                                  : std::min<int>(cfg.n_modes,
                                                  static_cast<int>(-37.0 / logr) + 1);
    double rn = r;
    em = e;
    for (int n = 1; n <= n_eff; ++n) {
      acc += std::sqrt(2.0 / n) * rn * (f.mode_a(n - 1) * em.real() + f.mode_b(n - 1) * em.imag());
      rn *= r;
      em *= e;
    }
    f.grid.data()[cells.idx[i]] = acc;
  }
  return f;
}

// Exact circle-average Gram entries for the dense sampler: grid values model
// the field averaged on circles of radius a = h/2 about the centers.
double avg_log_term(double dist, double a) {
  // mean over phi of log max(|dist + a e^{i phi}|, a); exact log(dist) once
  // the circles are disjoint (dist >= 2a).
  if (dist >= 2.0 * a) return std::log(dist);
  const int nq = 64;
  double s = 0.0;
  for (int j = 0; j < nq; ++j) {
    const double phi = 2.0 * M_PI * (j + 0.5) / nq;
    const double v = std::abs(cplx(dist + a * std::cos(phi), a * std::sin(phi)));
    s += std::log(std::max(v, a));
  }
  return s / nq;
}

FieldSample sample_dense(const GffConfig& cfg, std::uint64_t seed) {
  FieldSample f;
  f.res = cfg.res;
  f.n_modes = cfg.n_modes;
  f.seed = seed;
  f.grid.setZero(cfg.res, cfg.res);
  Rng rng(Rng::mix(seed ^ 0x5851f42d4c957f2dULL));

  f.mode_a.resize(cfg.n_modes);
  f.mode_b.resize(cfg.n_modes);
  for (int n = 0; n < cfg.n_modes; ++n) {
    f.mode_a(n) = rng.normal();
    f.mode_b(n) = rng.normal();
  }

  CellList cells = collect_cells(cfg.res);
  const std::size_t n = cells.idx.size();
  const std::size_t bytes = n * n * sizeof(double);
  if (bytes > cfg.max_dense_bytes)
    throw ResourceLimit("dense covariance needs " + std::to_string(bytes) +
                        " bytes; budget " + std::to_string(cfg.max_dense_bytes));

  const double h = 2.0 / cfg.res;
  const double a = 0.5 * h;
  Eigen::MatrixXd C(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const cplx zi(std::cos(cells.theta[i]) * cells.radius[i],
                  std::sin(cells.theta[i]) * cells.radius[i]);
    for (std::size_t j = 0; j <= i; ++j) {
      const cplx zj(std::cos(cells.theta[j]) * cells.radius[j],
                    std::sin(cells.theta[j]) * cells.radius[j]);
      double v;
      if (i == j) {
        v = -std::log(a) + std::log(std::max(1.0 - std::norm(zi), a));
      } else {
        // Dirichlet Green function: -log|zi-zj| + log|1 - zi conj(zj)|; the
        // second term is harmonic, so its double circle average is exact.
        v = -avg_log_term(std::abs(zi - zj), a) + std::log(std::abs(1.0 - zi * std::conj(zj)));
      }
      C(i, j) = v;
      C(j, i) = v;
    }
  }
  C.diagonal().array() += 1e-10;
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() != Eigen::Success)
    throw ResourceLimit("covariance factorization failed (not positive definite)");

  Eigen::VectorXd xi(n);
  for (std::size_t i = 0; i < n; ++i) xi(i) = rng.normal();
  Eigen::VectorXd dirichlet = llt.matrixL() * xi;

  for (std::size_t i = 0; i < n; ++i) {
    const double r = cells.radius[i];
    const double th = cells.theta[i];
    const cplx e(std::cos(th), std::sin(th));
    double acc = dirichlet(i);
    double rn = r;
    cplx em = e;
    for (int nn = 1; nn <= cfg.n_modes; ++nn) {
      acc += std::sqrt(2.0 / nn) * rn *
             (f.mode_a(nn - 1) * em.real() + f.mode_b(nn - 1) * em.imag());
      rn *= r;
      em *= e;
      if (rn < 1e-17) break;
    }
    f.grid.data()[cells.idx[i]] = acc;
  }
  return f;
}

}  // namespace

double FieldSample::trace(double theta) const {
  // Horner sum of Re[(a_n - i b_n) sqrt(2/n) e^{in theta}]
  const cplx e(std::cos(theta), std::sin(theta));
  cplx acc(0.0, 0.0);
  for (int n = n_modes; n >= 1; --n) {
    const cplx c(mode_a(n - 1), -mode_b(n - 1));
    acc = (acc + std::sqrt(2.0 / n) * c) * e;
  }
  return acc.real();
}

double FieldSample::gaussian_at(cplx z) const {
  const double r = std::abs(z);
  if (r >= 1.0 - 1e-12) return trace(std::arg(z));
  const double h = cell_size();
  const double gx = (z.real() + 1.0) / h - 0.5;
  const double gy = (z.imag() + 1.0) / h - 0.5;
  int i0 = static_cast<int>(std::floor(gx));
  int j0 = static_cast<int>(std::floor(gy));
  i0 = std::clamp(i0, 0, res - 2);
  j0 = std::clamp(j0, 0, res - 2);
  const double fx = std::clamp(gx - i0, 0.0, 1.0);
  const double fy = std::clamp(gy - j0, 0.0, 1.0);

  auto corner = [&](int ii, int jj) -> double {
    const double cx = -1.0 + (ii + 0.5) * h;
    const double cy = -1.0 + (jj + 0.5) * h;
    if (cx * cx + cy * cy < 1.0) return grid.data()[jj * res + ii];
    return trace(std::atan2(cy, cx));
  };

  const double v00 = corner(i0, j0), v10 = corner(i0 + 1, j0);
  const double v01 = corner(i0, j0 + 1), v11 = corner(i0 + 1, j0 + 1);
  return (1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v10 + (1 - fx) * fy * v01 +
         fx * fy * v11;
}

double FieldSample::deterministic_at(cplx z) const {
  double s = constant;
  for (const auto& ins : singularities) s += ins.coeff * green_disk(z, ins.location);
  return s;
}

FieldSample sample_gff(const GffConfig& cfg, std::uint64_t seed) {
  if (cfg.res < 16 || cfg.n_modes < 8)
    throw std::invalid_argument("sample_gff needs res >= 16 and n_modes >= 8");
  switch (cfg.method) {
    case SampleMethod::Dense: return sample_dense(cfg, seed);
    case SampleMethod::Modes: return sample_modes(cfg, seed);
    case SampleMethod::Auto: break;
  }
  if (cfg.res <= 128) {
    const std::size_t cells = static_cast<std::size_t>(cfg.res) * cfg.res * 79 / 100;
    if (cells * cells * sizeof(double) <= cfg.max_dense_bytes) return sample_dense(cfg, seed);
  }
  return sample_modes(cfg, seed);
}

FieldSample add_insertions(FieldSample field, double alpha, std::optional<cplx> tip,
                           double beta) {
  if (alpha != 0.0) field.singularities.push_back({cplx(0.0, 0.0), alpha});
  if (tip && beta != 0.0) {
    const cplx t = *tip / std::abs(*tip);  // snap to the circle
    field.singularities.push_back({t, 0.5 * beta});
  }
  return field;
}

CoordValue coordinate_change(const FieldSample& field, const loewner::ConformalChain& chain,
                             cplx z, double q) {
  CoordValue out;
  const auto inv = chain.inverse(z);
  out.value = field.value(inv.z) + q * std::log(std::abs(inv.deriv));
  // regularization-limited when the preimage sits close to the hull frontier:
  // detected by a poor forward roundtrip or by the precision flag.
  const auto fwd = chain.forward(inv.z);
  out.near_singularity = inv.lost_precision || fwd.absorbed ||
                         std::abs(fwd.w - z) > 1e-6;
  return out;
}

}  // namespace lqg::gff
