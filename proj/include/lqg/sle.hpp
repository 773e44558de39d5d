#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lqg/loewner.hpp"
#include "lqg/params.hpp"
#include "lqg/rng.hpp"

namespace lqg::sle {

// Radial SLE_kappa driving: theta_k = theta0 + sqrt(kappa) B_{k dt}.
loewner::DrivingPath sample_driving(double kappa, double capacity_horizon, double dt,
                                    std::uint64_t seed, double theta0 = 0.0);

struct NegativeIncrement : std::runtime_error {
  explicit NegativeIncrement(const std::string& w) : std::runtime_error(w) {}
};

// Converts capacity growth into quantum time for one run; phase fixed.
class QuantumClock {
 public:
  QuantumClock(Phase phase, double c0 = 1.0, double eps_count = 0.05)
      : phase_(phase), c0_(c0), eps_count_(eps_count) {}

  Phase phase() const { return phase_; }
  double accumulated() const { return accumulated_; }
  double c0() const { return c0_; }
  double eps_count() const { return eps_count_; }

  // Simple phase: increment = (L_after - L_before)/2. The two curve-side arc
  // masses are recorded separately as a regularization diagnostic.
  double tick_simple(double L_before, double L_after, double side_left, double side_right);

  // Simple phase, arc form: the added boundary mass is measured directly on
  // the two fresh curve-side windows, so old-structure regularization drift
  // cannot contaminate the clock. increment = (left + right)/2.
  double tick_simple_arcs(double side_left, double side_right);

  // Space-filling phase: increment = quantum area newly absorbed into the hull.
  double tick_area(double absorbed_mass);

  // Swallowing phase: increment = c0 eps^{4/gamma^2} x (count of swallow
  // events in the step with quantum boundary length in [eps, 2 eps]).
  double tick_swallow(const std::vector<double>& jump_sizes, double gamma);

  // latest two-sided discrepancy diagnostic (simple phase)
  double side_discrepancy() const { return side_discrepancy_; }

 private:
  Phase phase_;
  double c0_;
  double eps_count_;
  double accumulated_ = 0.0;
  double side_discrepancy_ = 0.0;
};

}  // namespace lqg::sle
