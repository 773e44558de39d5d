#include "lqg/gmc.hpp"

#include <algorithm>
#include <cmath>

namespace lqg::gmc {

namespace {

// Gauss-Legendre nodes/weights on [-1, 1], 16 points (doubled by symmetry for
// the 32-node rule used below).
constexpr int kGL = 16;
const double kGLx[kGL / 2] = {0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
                              0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
                              0.9445750230732326, 0.9894009349916499};
const double kGLw[kGL / 2] = {0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
                              0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
                              0.0622535239386479, 0.0271524594117541};

// mean of log|z' - p| over the full circle |z' - z| = eps (Jensen).
inline double avg_log_dist(cplx z, cplx p, double eps) {
  return std::log(std::max(std::abs(z - p), eps));
}

// Closed-form circle average of coeff * G(., a) on the full circle of radius
// eps about z.
double avg_green_term(cplx z, cplx a, double coeff, double eps) {
  const double abs_a = std::abs(a);
  double v = -avg_log_dist(z, a, eps);
  if (abs_a > 1e-14) {
    const cplx pole = cplx(1.0, 0.0) / std::conj(a);
    v += -std::log(abs_a) - avg_log_dist(z, pole, eps);
  }
  return coeff * v;
}

}  // namespace

double circle_average(const FieldSample& f, cplx z, double eps) {
  const double r = std::abs(z);
  // angular window of the circle lying inside D
  const bool partial = (r + eps > 1.0);
  double acc = 0.0;
  if (!partial) {
    double wsum = 0.0;
    for (int h = 0; h < 2; ++h) {
      for (int j = 0; j < kGL / 2; ++j) {
        const double x = h == 0 ? -kGLx[j] : kGLx[j];
        // map [-1,1] to [0, pi] twice (symmetrize over the full circle)
        for (int half = 0; half < 2; ++half) {
          const double phi = (half == 0 ? 0.0 : M_PI) + (x + 1.0) * 0.5 * M_PI;
          acc += kGLw[j] * f.gaussian_at(z + std::polar(eps, phi));
          wsum += kGLw[j];
        }
      }
    }
    acc /= wsum;
    acc += f.constant;
    for (const auto& ins : f.singularities)
      acc += avg_green_term(z, ins.location, ins.coeff, eps);
    return acc;
  }

  // Partial circle: quadrature of the full field over the inside arc.
  // |z + eps e^{i phi}|^2 < 1  <=>  cos(phi - arg z) < (1 - r^2 - eps^2)/(2 r eps)
  double lo, hi;  // window relative to arg z
  const double c = (1.0 - r * r - eps * eps) / (2.0 * r * eps);
  if (c >= 1.0) { lo = -M_PI; hi = M_PI; }
  else if (c <= -1.0) { lo = 0.0; hi = 0.0; }
  else { const double d = std::acos(c); lo = d; hi = 2.0 * M_PI - d; }
  if (hi <= lo) return f.value(z);  // degenerate; fall back to the point value
  const double th = std::arg(z);
  double wsum = 0.0;
  for (int h = 0; h < 2; ++h) {
    for (int j = 0; j < kGL / 2; ++j) {
      const double x = h == 0 ? -kGLx[j] : kGLx[j];
      const double phi = th + lo + (x + 1.0) * 0.5 * (hi - lo);
      acc += kGLw[j] * f.value(z + std::polar(eps, phi));
      wsum += kGLw[j];
    }
  }
  return acc / wsum;
}

double boundary_average(const FieldSample& f, cplx x, double eps) {
  const cplx xn = x / std::abs(x);
  const double th = std::arg(xn);
  // inside window: cos(phi - th) < -eps/2, centred on the inward normal
  const double half = M_PI / 2.0 - std::asin(std::min(1.0, eps * 0.5));
  const double lo = M_PI - half, hi = M_PI + half;
  double acc = 0.0, wsum = 0.0;
  // check for a nearby insertion; refine the deterministic part if needed
  bool near = false;
  for (const auto& ins : f.singularities)
    if (std::abs(ins.location - xn) < 4.0 * eps) near = true;

  for (int h = 0; h < 2; ++h) {
    for (int j = 0; j < kGL / 2; ++j) {
      const double t = h == 0 ? -kGLx[j] : kGLx[j];
      const double phi = th + lo + (t + 1.0) * 0.5 * (hi - lo);
      const cplx p = xn + std::polar(eps, phi);
      double v = f.gaussian_at(p);
      if (!near) v += f.deterministic_at(p);
      acc += kGLw[j] * v;
      wsum += kGLw[j];
    }
  }
  acc /= wsum;
  if (near) {
    // midpoint rule with many nodes; log singularities are integrable and the
    // nodes avoid them almost surely
    const int nq = 257;
    double det = 0.0;
    for (int j = 0; j < nq; ++j) {
      const double phi = th + lo + (j + 0.5) * (hi - lo) / nq;
      det += f.deterministic_at(xn + std::polar(eps, phi));
    }
    acc += det / nq;
  }
  return acc;
}

AreaMeasure area_measure(const FieldSample& f, double gamma, double eps) {
  AreaMeasure m;
  m.res = f.res;
  m.gamma = gamma;
  m.eps = eps > 0.0 ? eps : kEpsCells * f.cell_size();
  if (m.eps < f.cell_size())
    throw std::invalid_argument("area_measure: eps below one grid cell");
  const int res = f.res;
  m.cell_masses.setZero(res * res);
  const double h = f.cell_size();
  const double cellarea = h * h;
  const double pref = std::pow(m.eps, gamma * gamma / 2.0) * cellarea;
  for (int iy = 0; iy < res; ++iy) {
    for (int ix = 0; ix < res; ++ix) {
      const cplx z(-1.0 + (ix + 0.5) * h, -1.0 + (iy + 0.5) * h);
      if (std::norm(z) >= 1.0) continue;
      const double havg = circle_average(f, z, m.eps);
      m.cell_masses(iy * res + ix) = pref * std::exp(gamma * havg);
    }
  }
  return m;
}

double AreaMeasure::mass_in_ball(cplx center, double radius) const {
  const double h = 2.0 / res;
  double s = 0.0;
  for (int iy = 0; iy < res; ++iy) {
    for (int ix = 0; ix < res; ++ix) {
      const cplx z(-1.0 + (ix + 0.5) * h, -1.0 + (iy + 0.5) * h);
      if (std::abs(z - center) <= radius) s += cell_masses(iy * res + ix);
    }
  }
  return s;
}

BoundaryMeasure boundary_measure(const FieldSample& f, double beta, double eps,
                                 int n_arcs) {
  BoundaryMeasure m;
  m.n_arcs = n_arcs;
  m.beta = beta;
  m.eps = eps > 0.0 ? eps : kEpsCells * f.cell_size();
  m.arc_masses.setZero(n_arcs);
  const double arclen = 2.0 * M_PI / n_arcs;
  if (m.eps < arclen)
    throw std::invalid_argument("boundary_measure: eps below one boundary arc");
  const double pref = std::pow(m.eps, beta * beta / 4.0) * arclen;
  for (int j = 0; j < n_arcs; ++j) {
    const double th = (j + 0.5) * arclen;
    const double havg = boundary_average(f, std::polar(1.0, th), m.eps);
    m.arc_masses(j) = pref * std::exp(0.5 * beta * havg);
  }
  return m;
}

double BoundaryMeasure::window_mass(double a, double b) const {
  auto wrap = [](double t) {
    t = std::fmod(t, 2.0 * M_PI);
    return t < 0.0 ? t + 2.0 * M_PI : t;
  };
  a = wrap(a);
  b = wrap(b);
  const double w = arc_width();
  auto cdf = [&](double t) {  // mass of [0, t)
    const int full = static_cast<int>(t / w);
    double s = 0.0;
    for (int j = 0; j < full && j < n_arcs; ++j) s += arc_masses(j);
    if (full < n_arcs) s += arc_masses(full) * (t - full * w) / w;
    return s;
  };
  if (b >= a) return cdf(b) - cdf(a);
  return total() - (cdf(a) - cdf(b));
}

double sample_point(const BoundaryMeasure& m, Rng& rng) {
  const double tot = m.total();
  if (!(tot > 0.0)) throw ZeroMass("boundary measure has zero total mass");
  double u = rng.uniform() * tot;
  for (int j = 0; j < m.n_arcs; ++j) {
    if (u < m.arc_masses(j)) {
      const double w = m.arc_width();
      return j * w + rng.uniform() * w;
    }
    u -= m.arc_masses(j);
  }
  // numerical tail: last positive arc
  for (int j = m.n_arcs - 1; j >= 0; --j)
    if (m.arc_masses(j) > 0.0) return (j + rng.uniform()) * m.arc_width();
  throw ZeroMass("boundary measure has zero total mass");
}

}  // namespace lqg::gmc
