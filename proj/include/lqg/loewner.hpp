#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace lqg::loewner {

using cplx = std::complex<double>;

inline constexpr double kSwallowCutoff = 1e-3;   // rho: capture distance from the driving point
inline constexpr double kDefaultDt = 1e-4;       // capacity units per driving step

// Radial Loewner vector field, Phi(u, z) = z (u + z) / (u - z).
inline cplx phi_field(cplx u, cplx z) { return z * (u + z) / (u - z); }

struct StepTooLarge : std::runtime_error {
  explicit StepTooLarge(const std::string& w) : std::runtime_error(w) {}
};

// ---------------------------------------------------------------------------
// Closed-form one-step map for constant driving.
//
// With v = z/u the radial Loewner equation reads v' = v(1+v)/(1-v), solved by
// k(v_t) = e^t k(v_0) where k(v) = v/(1+v)^2 maps D conformally onto
// C \ [1/4, inf). One capacity step of size dt is therefore exact.
// ---------------------------------------------------------------------------
namespace slit {

inline cplx k(cplx v) {
  const cplx onep = 1.0 + v;
  return v / (onep * onep);
}

inline cplx k_prime(cplx v) {
  const cplx onep = 1.0 + v;
  return (1.0 - v) / (onep * onep * onep);
}

// Stable branch of k^{-1} selecting the root inside the closed disk.
inline cplx k_inv(cplx x) {
  return 2.0 * x / (1.0 - 2.0 * x + std::sqrt(1.0 - 4.0 * x));
}

struct FlowResult {
  cplx v;                 // position after the step (normalized by u)
  bool absorbed = false;  // trajectory passed within rho of the driving point
  double tau = 0.0;       // capacity time into the step at closest approach
};

// Advances v = z/u by capacity dt; detects capture within distance rho of 1.
FlowResult advance(cplx v, double dt, double rho);

// Derivative of the one-step forward map at v (normalized coordinates), given
// the image v1. Equals e^dt k'(v)/k'(v1).
inline cplx forward_deriv(cplx v, cplx v1, double edt) {
  return edt * k_prime(v) / k_prime(v1);
}

// Boundary fast path: half-angle cosine contracts exactly, c' = e^{-dt/2} c
// where c = cos((psi - theta_U)/2). Sign of (psi - theta_U) is preserved.
inline double boundary_half_cos(double c, double exp_half_dt_neg) {
  return c * exp_half_dt_neg;
}

// Exact increment of log|g'| along the boundary over one step:
// d/dt log|g'| = -1/(2 sin^2(D/2)) integrates to -0.5 log((e^dt - c^2)/(1 - c^2)).
inline double boundary_dlog_deriv(double c, double edt) {
  const double c2 = c * c;
  return -0.5 * std::log((edt - c2) / (1.0 - c2));
}

}  // namespace slit

// ---------------------------------------------------------------------------
// Driving data
// ---------------------------------------------------------------------------

// Piecewise-constant point driving: U = exp(i angles[k]) on [k dt, (k+1) dt).
struct DrivingPath {
  double dt = kDefaultDt;
  std::vector<double> angles;

  double capacity() const { return dt * static_cast<double>(angles.size()); }
};

// Per-step probability weights over a uniform partition of the circle into
// n_arcs arcs; each row must sum to 1.
struct DrivingMeasure {
  double dt = kDefaultDt;
  int n_arcs = 0;
  std::vector<Eigen::ArrayXd> rows;

  double capacity() const { return dt * static_cast<double>(rows.size()); }
};

// ---------------------------------------------------------------------------
// Conformal chain: composition of incremental maps for g_t : D \ K_t -> D
// ---------------------------------------------------------------------------

struct SlitStep {
  double dt;
  cplx u;
};

struct MeasureStep {
  double dt;
  Eigen::ArrayXd weights;  // over uniform arcs; midpoints exp(2 pi i (j+1/2)/n)
};

struct RotationStep {
  double theta;
};

struct DilationStep {  // exact g(z) = e^t z, test oracle for uniform driving
  double t;
};

using ChainStep = std::variant<SlitStep, MeasureStep, RotationStep, DilationStep>;

struct MappedPoint {
  cplx w;
  cplx deriv{1.0, 0.0};   // dg/dz accumulated through the chain
  bool absorbed = false;
  double capacity_time = 0.0;  // absorption time when absorbed
};

struct InvertResult {
  cplx z;
  cplx deriv{1.0, 0.0};   // d(g^{-1})/dw
  bool lost_precision = false;
};

class ConformalChain {
 public:
  ConformalChain() = default;

  void push(ChainStep s);
  std::size_t size() const { return steps_.size(); }
  double total_capacity() const { return capacity_; }
  const std::vector<ChainStep>& steps() const { return steps_; }

  // Flows a point forward through steps [from, size).
  MappedPoint forward(cplx z, std::size_t from = 0) const;

  // Pulls w back through the whole chain; flags |w| > 0.95.
  InvertResult inverse(cplx w) const;

  // log g'(0); equals total capacity up to integrator error.
  double log_deriv_origin() const;

 private:
  std::vector<ChainStep> steps_;
  double capacity_ = 0.0;
};

// ---------------------------------------------------------------------------
// Evolution entry points
// ---------------------------------------------------------------------------

struct PointStatus {
  bool swallowed = false;
  double capacity_time = 0.0;
};

// Appends the driving path to the chain and flows tracked points, marking
// swallows at the capacity time the flow reached the cutoff.
std::vector<PointStatus> evolve_point(ConformalChain& chain, const DrivingPath& driving,
                                      std::vector<MappedPoint>& tracked);

std::vector<PointStatus> evolve_measure(ConformalChain& chain, const DrivingMeasure& driving,
                                        std::vector<MappedPoint>& tracked);

InvertResult invert(const ConformalChain& chain, cplx w);

// sup over |w| = r of |inv_A(w) - inv_B(w)|, the compact-probe Caratheodory
// metric proxy; n_probe points on the circle (the sup of a harmonic modulus
// difference is attained on the boundary circle).
double caratheodory_diagnostic(const ConformalChain& a, const ConformalChain& b, double r,
                               int n_probe = 256);

// ---------------------------------------------------------------------------
// Grid tracking and swallow scan
// ---------------------------------------------------------------------------

struct SwallowEvent {
  double capacity_time = 0.0;
  int step_index = -1;
  std::vector<int> cells;           // linear indices, 4-connected component
  std::vector<int> boundary_cells;  // component cells adjacent to a survivor
};

// Tracked simulation grid over D: res x res cells on [-1,1]^2, active cells
// have centers inside the disk.
class TrackedGrid {
 public:
  explicit TrackedGrid(int res);

  int res() const { return res_; }
  int cell_index(int ix, int iy) const { return iy * res_ + ix; }
  bool in_disk(int idx) const { return in_disk_[idx]; }
  cplx center(int idx) const;
  int origin_cell() const { return origin_; }

  // Image positions under the chain so far; NaN once swallowed.
  std::vector<MappedPoint>& points() { return pts_; }
  const std::vector<MappedPoint>& points() const { return pts_; }
  const std::vector<int>& swallow_step() const { return swallow_step_; }
  void record_steps(const ConformalChain& chain, std::size_t first_new_step);

 private:
  int res_;
  int origin_;
  std::vector<bool> in_disk_;
  std::vector<MappedPoint> pts_;
  std::vector<int> swallow_step_;  // -1 while alive
};

// Groups cells swallowed in the same capacity step into 4-connected
// components; components containing the origin cell are suppressed, as are
// grid artifacts of at most `artifact_cells` cells.
std::vector<SwallowEvent> swallow_scan(const TrackedGrid& grid, double dt,
                                       int artifact_cells = 2);

}  // namespace lqg::loewner
