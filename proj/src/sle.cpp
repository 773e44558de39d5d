#include "lqg/sle.hpp"

#include <cmath>

namespace lqg::sle {

loewner::DrivingPath sample_driving(double kappa, double capacity_horizon, double dt,
                                    std::uint64_t seed, double theta0) {
  if (!(kappa >= 0.0)) throw std::invalid_argument("sample_driving: kappa must be >= 0");
  loewner::DrivingPath p;
  p.dt = dt;
  const auto n = static_cast<std::size_t>(std::ceil(capacity_horizon / dt));
  p.angles.resize(n);
  Rng rng(Rng::mix(seed));
  const double sig = std::sqrt(kappa * dt);
  double theta = theta0;
  for (std::size_t k = 0; k < n; ++k) {
    p.angles[k] = theta;  // theta_k = sqrt(kappa) B_{k dt}, left-continuous steps
    theta += sig * rng.normal();
  }
  return p;
}

double QuantumClock::tick_simple(double L_before, double L_after, double side_left,
                                 double side_right) {
  if (phase_ != Phase::Dilute) throw std::logic_error("tick_simple needs the dilute phase");
  const double inc = 0.5 * (L_after - L_before);
  // A small negative excursion is measurement jitter at fixed regularization;
  // a large one signals breakdown. Signed accumulation keeps L = ell + 2s an
  // exact bookkeeping identity.
  if (inc < -0.02 * std::max(1.0, L_before))
    throw NegativeIncrement("boundary length decreased by " + std::to_string(-2.0 * inc));
  const double denom = 0.5 * (side_left + side_right);
  side_discrepancy_ = denom > 0.0 ? std::abs(side_left - side_right) / denom : 0.0;
  accumulated_ += inc;
  return inc;
}

double QuantumClock::tick_simple_arcs(double side_left, double side_right) {
  if (phase_ != Phase::Dilute) throw std::logic_error("tick_simple_arcs needs the dilute phase");
  if (side_left < 0.0 || side_right < 0.0)
    throw NegativeIncrement("negative side-arc mass");
  const double denom = 0.5 * (side_left + side_right);
  side_discrepancy_ = denom > 0.0 ? std::abs(side_left - side_right) / denom : 0.0;
  accumulated_ += denom;
  return denom;
}

double QuantumClock::tick_area(double absorbed_mass) {
  if (phase_ != Phase::SpaceFilling)
    throw std::logic_error("tick_area needs the space-filling phase");
  accumulated_ += absorbed_mass;
  return absorbed_mass;
}

double QuantumClock::tick_swallow(const std::vector<double>& jump_sizes, double gamma) {
  if (phase_ != Phase::Swallowing)
    throw std::logic_error("tick_swallow needs the swallowing phase");
  int count = 0;
  for (double s : jump_sizes)
    if (s >= eps_count_ && s < 2.0 * eps_count_) ++count;
  const double inc = c0_ * std::pow(eps_count_, 4.0 / (gamma * gamma)) * count;
  accumulated_ += inc;
  return inc;
}

}  // namespace lqg::sle
