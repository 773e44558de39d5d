#pragma once

#include <stdexcept>

#include <Eigen/Dense>

#include "lqg/gff.hpp"
#include "lqg/rng.hpp"

namespace lqg::gmc {

using gff::FieldSample;
using gff::cplx;

struct ZeroMass : std::runtime_error {
  explicit ZeroMass(const std::string& w) : std::runtime_error(w) {}
};

inline constexpr int kDefaultArcs = 4096;
inline constexpr int kQuadNodes = 32;
inline constexpr double kEpsCells = 3.0;  // default regularization, in grid cells

// eps-circle average of the full field at z: Gaussian part by quadrature on
// the circle (partial circles near the boundary), log terms in closed form
// where the circle is complete.
double circle_average(const FieldSample& f, cplx z, double eps);

// Semicircle average at a boundary point x (|x| = 1), over dB(x,eps) inter D.
double boundary_average(const FieldSample& f, cplx x, double eps);

// gamma-area measure: cell mass = eps^{gamma^2/2} exp(gamma h_eps) cellarea.
struct AreaMeasure {
  int res = 0;
  double eps = 0.0;
  double gamma = 0.0;
  Eigen::ArrayXd cell_masses;  // res*res, zero outside the disk

  double total() const { return cell_masses.sum(); }
  double mass_in_ball(cplx center, double radius) const;
};

AreaMeasure area_measure(const FieldSample& f, double gamma, double eps = 0.0);

// beta/2-boundary measure on a uniform arc partition:
// arc mass = eps^{beta^2/4} exp((beta/2) h_eps(midpoint)) arclength.
struct BoundaryMeasure {
  int n_arcs = 0;
  double eps = 0.0;
  double beta = 0.0;
  Eigen::ArrayXd arc_masses;

  double total() const { return arc_masses.sum(); }
  double arc_width() const { return 2.0 * M_PI / n_arcs; }
  // mass of the angular window [a, b) (wrapping allowed), linear within arcs
  double window_mass(double a, double b) const;
};

BoundaryMeasure boundary_measure(const FieldSample& f, double beta, double eps = 0.0,
                                 int n_arcs = kDefaultArcs);

// Draws an angle with probability proportional to arc masses, uniform within
// the chosen arc.
double sample_point(const BoundaryMeasure& m, Rng& rng);

}  // namespace lqg::gmc
