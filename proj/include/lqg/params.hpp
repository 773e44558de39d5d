#pragma once

#include <stdexcept>
#include <string>

namespace lqg {

// Growth phases, matching the three SLE_kappa regimes.
enum class Phase { Dilute, Swallowing, SpaceFilling };

const char* phase_name(Phase p);

// Coupled constants of the delta-QLE(gamma^2, eta) process.
//
// Valid instances satisfy, to tolerance kParamTol:
//   kappa in {gamma^2, 16/gamma^2}
//   kappa = 6 / (2 eta + 1)
//   eta   = beta^2/4 - beta q / 2 + 1
//   beta  in (-2, 2)
// and (gamma, eta) lies on one of the two admissible parameter curves.
struct ParamSet {
  double gamma = 0;
  double kappa = 0;
  double eta = 0;
  double alpha = 0;
  double beta = 0;
  double q = 0;  // background charge Q = gamma/2 + 2/gamma
  Phase phase = Phase::Dilute;
};

inline constexpr double kParamTol = 1e-12;

struct OutOfRange : std::domain_error {
  explicit OutOfRange(const std::string& what) : std::domain_error(what) {}
};

// eta as a function of the tip-weight exponent beta, for beta < Q.
double eta_from_beta(double beta, double q);

// Populates the full parameter set from (gamma, eta).
// Throws OutOfRange when (gamma, eta) is off both admissible curves, lands in
// the excluded beta ranges, or matches both curves at once.
ParamSet derive_params(double gamma, double eta);

// eta on the upper curve (kappa = gamma^2) and lower curve (kappa = 16/gamma^2).
double eta_upper_branch(double gamma);
double eta_lower_branch(double gamma);

}  // namespace lqg
