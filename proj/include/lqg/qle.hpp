#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "lqg/gff.hpp"
#include "lqg/gmc.hpp"
#include "lqg/loewner.hpp"
#include "lqg/params.hpp"
#include "lqg/sle.hpp"

namespace lqg::qle {

using gff::cplx;
using gff::FieldSample;

struct RunConfig {
  ParamSet params;
  double delta = 0.05;      // quantum time per SLE segment
  double ell0 = 1.0;        // initial boundary length
  double r0 = 0.02;         // origin cutoff: terminate once conformal radius <= r0
  int grid_resolution = 256;
  int n_modes = 512;
  double dt = 1e-4;         // capacity step
  double eps_reg = 0.0;     // 0 -> 3 grid cells
  double eps_count = 0.05;  // swallowing-clock counting window lower edge
  std::uint64_t seed = 1;
  double capacity_budget = 8.0;
  double s_stop = 0.0;      // optional: stop once quantum time reaches this (0 = off)
  int n_arcs_chain = 1024;  // arcs for uniformized boundary measurements
  int quad_chain = 8;       // semicircle quadrature nodes during runs
  std::vector<double> snapshot_s;  // quantum times at which to capture the hull

  double eps() const {
    return eps_reg > 0.0 ? eps_reg : gmc::kEpsCells * 2.0 / grid_resolution;
  }
};

struct TraceSample {
  double s = 0.0;
  double t = 0.0;
  double L = 0.0;               // boundary-length process (clock bookkeeping)
  double L_gmc = 0.0;           // measured total boundary mass (may drift at fixed eps)
  double A_explored = 0.0;      // phase clock's absorbed quantum area
  double A_pockets = 0.0;       // enclosed-component mass only
  double footprint_mass = 0.0;  // raw curve raster footprint (diagnostic)
  double side_discrepancy = 0.0;
};

struct TipEvent {
  double s = 0.0;
  double angle = 0.0;          // image angle resampled from the beta measure
  bool resolution_limited = false;  // prime-end ambiguity at grid scale
};

struct SwallowRecord {
  double s = 0.0;
  double t = 0.0;
  double jump = 0.0;     // quantum boundary length of the component (pre-swallow)
  double area = 0.0;     // quantum area of its cells (walls attributed at assignment)
  int n_cells = 0;
  int step = -1;
  bool terminal = false;  // remainder record emitted at termination
};

struct GrowthTrace {
  std::vector<TraceSample> samples;
  std::vector<TipEvent> tip_events;
  std::vector<SwallowRecord> swallow_records;
  double duration_s = 0.0;          // quantum time reached
  double duration_t = 0.0;          // capacity reached
  bool budget_exhausted = false;    // capacity budget hit before the r0 cutoff
  double weight = 1.0;
  std::uint64_t seed = 0;
  int near_singularity_count = 0;   // flagged measurement nodes
  double total_area = 0.0;          // A(D) of the sampled field
  double mean_cell_mass = 0.0;
  double terminal_live_mass = 0.0;  // unexplored mass connected to the origin at stop
  double footprint_mass = 0.0;      // total curve raster footprint
};

// ---------------------------------------------------------------------------
// Frontier engine: boundary markers flowed by exact slit-map steps, with
// Poisson/Cauchy evaluation of g^{-1} near the image circle for GMC
// measurements in uniformized coordinates.
// ---------------------------------------------------------------------------

struct Marker {
  double psi;        // image angle
  double logd;       // accumulated log|g'| at the anchor, along the boundary
  cplx anchor;       // preimage in the original disk
  double base;       // field value at the anchor (full field)
  double snap_psi;   // angle at the last checkpoint (pocket-mass reconstruction)
  std::int8_t side;  // 0 original boundary, +1 curve left, -1 curve right
};

class FrontierEngine {
 public:
  FrontierEngine(const FieldSample& field, const gmc::AreaMeasure& area,
                 const RunConfig& cfg);

  // One capacity step of size cfg.dt with driving angle theta_u.
  void step(double theta_u);

  // Exact one-step image of a boundary angle under the slit map.
  static double step_angle(double psi, double theta_u, double dt);

  double capacity() const { return t_; }
  std::size_t marker_count() const { return markers_.size(); }

  // Mapped-out field value at an image point near the circle (depth <= ~4 eps):
  // field(g^{-1} w) + Q log|(g^{-1})'(w)|.
  double pullback_value(cplx w, bool* flagged = nullptr) const;

  // Poisson evaluation of g^{-1} and its Wirtinger derivative at w (|w| < 1).
  struct InvEval {
    cplx z;
    cplx dz;  // (g^{-1})'(w)
    bool ok = true;
  };
  InvEval eval_inverse(cplx w) const;

  // Drops markers whose anchors satisfy pred (contiguous doomed clusters).
  template <class Pred>
  std::size_t drop_where(Pred&& pred) {
    std::deque<Marker> keep;
    std::size_t dropped = 0;
    for (const auto& m : markers_) {
      if (pred(m)) { ++dropped; continue; }
      keep.push_back(m);
    }
    markers_.swap(keep);
    return dropped;
  }

  // Uniformized boundary measure over n uniform arcs with exponent b/2.
  Eigen::ArrayXd measure_arcs(double b, int n_arcs, int quad_nodes) const;

  // Total gamma-boundary mass (the L process) and per-side curve masses.
  struct LengthMeasurement {
    double total = 0.0;
    double side_left = 0.0;
    double side_right = 0.0;
  };
  LengthMeasurement measure_length(int n_arcs, int quad_nodes) const;

  // mass of the angular image window [a,b] at the current time (local arcs)
  double window_mass(double a, double b, int quad_nodes) const;

  // Snapshot marker angles (pocket-mass reconstruction).
  void snapshot_angles();

  // Marker interval strictly inside (lo, hi) image angles gets dropped;
  // returns the window mass measured just before the drop.
  double drop_interval(double lo, double hi);

  // anchors for the current step's new slit polyline (original coordinates)
  const std::vector<cplx>& last_slit_anchors() const { return slit_anchors_; }

  // preimage of an image boundary angle by marker interpolation
  cplx boundary_preimage(double psi, bool* resolution_limited = nullptr) const;

  const RunConfig& cfg() const { return cfg_; }
  int flagged_nodes() const { return flagged_nodes_; }

  // testing hooks
  const std::deque<Marker>& markers() const { return markers_; }

 private:
  friend class RunLoop;
  const FieldSample& field_;
  const RunConfig& cfg_;
  double q_ = 0.0;
  double t_ = 0.0;
  double eps_ = 0.0;
  std::deque<Marker> markers_;  // circular order; cut inside the tip gap
  double tip_theta_ = 0.0;      // driving angle of the last step
  cplx tip_anchor_;             // preimage of the current tip
  std::vector<cplx> slit_anchors_;
  std::uint64_t prune_counter_ = 0;
  mutable int flagged_nodes_ = 0;

  void rotate_cut(double theta_u);
  void insert_slit_markers(double theta_u, double edt);
  void densify_near_tip(double theta_u);
  void prune(double theta_u);
  double boundary_value_at(double psi) const;  // mapped-out trace by interpolation
};

// ---------------------------------------------------------------------------
// Run entry points
// ---------------------------------------------------------------------------

struct HullSnapshot {
  double s = 0.0;
  double t = 0.0;
  std::vector<cplx> frontier;  // marker anchors in boundary order
  cplx tip;
};

struct RunResult {
  GrowthTrace trace;
  // terminal observables for ensemble statistics
  double area_b_half = 0.0;     // A_{phi_s}(B(0,1/2)) at stop time, normalized field
  double arcs_gamma[4] = {0, 0, 0, 0};  // gamma-mass of 4 fixed image arcs
  double beta_mass_total = 0.0;
  double L_stop = 0.0;
  bool reached_stop = false;
  std::vector<HullSnapshot> snapshots;
};

struct ClockFailure : std::runtime_error {
  explicit ClockFailure(const std::string& w) : std::runtime_error(w) {}
};

// Runs one delta-QLE process; when cfg.s_stop > 0 the run halts there and the
// stationarity observables are measured.
RunResult run_delta_qle(const RunConfig& cfg);

// Samples the start state only and measures the stationarity observables at
// s = 0 with the same machinery/normalization as the running measurement.
RunResult observe_start(const RunConfig& cfg);

// Total gamma-boundary GMC mass of the mapped-out field at scale eps in
// uniformized coordinates (exact chain inversion; reference implementation
// the engine is validated against).
struct BoundaryLengthResult {
  double value = 0.0;
  int near_singularity = 0;
};
BoundaryLengthResult boundary_length_at(const FieldSample& field,
                                        const loewner::ConformalChain& chain, double gamma,
                                        double q, double eps, int n_arcs = 512,
                                        int quad_nodes = 16);

// Registry slice of a trace (swallowing phase bookkeeping).
std::vector<SwallowRecord> swallowed_registry(const GrowthTrace& trace);

}  // namespace lqg::qle
