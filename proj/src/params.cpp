#include "lqg/params.hpp"

#include <cmath>
#include <sstream>

namespace lqg {

namespace {

const double kSqrt3 = std::sqrt(3.0);

std::string fmt_pair(double gamma, double eta) {
  std::ostringstream os;
  os << "(gamma=" << gamma << ", eta=" << eta << ")";
  return os.str();
}

}  // namespace

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Dilute: return "dilute";
    case Phase::Swallowing: return "swallowing";
    case Phase::SpaceFilling: return "space-filling";
  }
  return "?";
}

double eta_from_beta(double beta, double q) {
  return 0.25 * beta * beta - 0.5 * beta * q + 1.0;
}

double eta_upper_branch(double gamma) { return 3.0 / (gamma * gamma) - 0.5; }

double eta_lower_branch(double gamma) { return 3.0 * gamma * gamma / 16.0 - 0.5; }

ParamSet derive_params(double gamma, double eta) {
  if (!(gamma > 0.0) || !(gamma < 2.0))
    throw OutOfRange("gamma must lie in (0, 2), got " + fmt_pair(gamma, eta));

  const bool on_upper = std::abs(eta - eta_upper_branch(gamma)) <= kParamTol;
  const bool on_lower = std::abs(eta - eta_lower_branch(gamma)) <= kParamTol;
  if (on_upper && on_lower)
    throw OutOfRange("ambiguous branch (both eta formulas match) at " +
                     fmt_pair(gamma, eta));
  if (!on_upper && !on_lower)
    throw OutOfRange("eta matches neither 3/gamma^2 - 1/2 nor 3 gamma^2/16 - 1/2 at " +
                     fmt_pair(gamma, eta));

  ParamSet p;
  p.gamma = gamma;
  p.eta = eta;
  p.q = 0.5 * gamma + 2.0 / gamma;

  if (on_upper) {
    if (!(gamma > kSqrt3 - 1.0))
      throw OutOfRange("upper branch needs gamma in (sqrt(3)-1, 2); beta <= -2 at " +
                       fmt_pair(gamma, eta));
    p.kappa = gamma * gamma;
    p.alpha = p.q - 1.0 / gamma;
    p.beta = gamma - 2.0 / gamma;
    p.phase = Phase::Dilute;
  } else {
    p.kappa = 16.0 / (gamma * gamma);
    p.alpha = p.q - 0.25 * gamma;
    if (gamma < 4.0 / 3.0) {
      p.beta = 1.5 * gamma;
      p.phase = Phase::SpaceFilling;
    } else if (gamma > 2.0 * kSqrt3 - 2.0) {
      p.beta = 4.0 / gamma - 0.5 * gamma;
      p.phase = Phase::Swallowing;
    } else {
      throw OutOfRange(
          "lower branch excludes gamma in [4/3, 2 sqrt(3)-2] (beta >= 2) at " +
          fmt_pair(gamma, eta));
    }
  }

  // Closed-form consistency, written as 6/kappa = 2 eta + 1 to avoid the
  // cancellation in 2 eta + 1 near eta = -1/2 (small gamma on the lower curve).
  if (std::abs(6.0 / p.kappa - (2.0 * eta + 1.0)) > kParamTol * std::max(1.0, 6.0 / p.kappa))
    throw OutOfRange("kappa = 6/(2 eta + 1) violated at " + fmt_pair(gamma, eta));
  if (!(p.beta > -2.0 && p.beta < 2.0))
    throw OutOfRange("beta out of (-2, 2) at " + fmt_pair(gamma, eta));
  return p;
}

}  // namespace lqg
