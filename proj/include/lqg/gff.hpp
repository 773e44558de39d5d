#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "lqg/loewner.hpp"

namespace lqg::gff {

using cplx = std::complex<double>;

// Free-boundary Green function on the unit disk,
//   G(z, w) = -log|z - w| - log|1 - z conj(w)|.
// G(z, 0) = -log|z|; on the boundary it equals -2 log|x - y|.
inline double green_disk(cplx z, cplx w) {
  return -std::log(std::abs(z - w)) - std::log(std::abs(1.0 - z * std::conj(w)));
}

struct Insertion {
  cplx location;   // in the closed disk
  double coeff;    // term coeff * G(z, location)
};

struct ResourceLimit : std::runtime_error {
  explicit ResourceLimit(const std::string& w) : std::runtime_error(w) {}
};

struct DegenerateMass : std::runtime_error {
  explicit DegenerateMass(const std::string& w) : std::runtime_error(w) {}
};

// One realized field on the disk. The Gaussian part lives on the grid plus
// the boundary Fourier trace; log singularities stay analytic; evaluation is
// grid/trace interpolation plus the exact singular terms and the constant.
struct FieldSample {
  int res = 0;
  int n_modes = 0;
  Eigen::ArrayXXd grid;      // res x res cell-center values; 0 outside the disk
  Eigen::ArrayXd mode_a;     // boundary modes, trace = sum sqrt(2/n)(a_n cos + b_n sin)
  Eigen::ArrayXd mode_b;
  std::vector<Insertion> singularities;
  double constant = 0.0;
  double weight = 1.0;
  std::uint64_t seed = 0;

  double cell_size() const { return 2.0 / res; }

  // Boundary trace of the Gaussian part at angle theta (exact mode sum).
  double trace(double theta) const;

  // Gaussian part at z: bilinear grid interpolation in the bulk, trace on and
  // beyond the unit circle; stencil corners outside the disk fall back to the
  // trace at their angle.
  double gaussian_at(cplx z) const;

  // All singular terms plus the additive constant at z.
  double deterministic_at(cplx z) const;

  double value(cplx z) const { return gaussian_at(z) + deterministic_at(z); }
};

enum class SampleMethod { Auto, Dense, Modes };

struct GffConfig {
  int res = 256;
  int n_modes = 512;        // boundary trace truncation
  int bulk_modes = 0;       // angular modes of the bulk sampler; 0 = 2 * n_modes cap 512
  SampleMethod method = SampleMethod::Auto;
  std::size_t max_dense_bytes = static_cast<std::size_t>(1.5e9);
};

// Samples the free-boundary GFF (mean zero on the circle). Dense covariance
// factorization for grids <= 128^2, exact radial-mode construction above.
FieldSample sample_gff(const GffConfig& cfg, std::uint64_t seed);

// Adds alpha G(z,0) and (beta/2) G(z,tip); Gaussian part untouched.
FieldSample add_insertions(FieldSample field, double alpha, std::optional<cplx> tip,
                           double beta);

struct CoordValue {
  double value = 0.0;
  bool near_singularity = false;  // preimage within a cell of the hull frontier
};

struct FixedLengthField {
  FieldSample field;
  double pre_shift_length = 0.0;  // L measured before the (2/gamma) log(l/L) shift
  int rejects = 0;                // DegenerateMass resamples
};

// (g . field)(z) = field(g^{-1} z) + q log |(g^{-1})'(z)| through the chain.
CoordValue coordinate_change(const FieldSample& field, const loewner::ConformalChain& chain,
                             cplx z, double q);

}  // namespace lqg::gff

namespace lqg {
struct ParamSet;
}

namespace lqg::gff {

// Samples a field with insertions (alpha at 0, beta at tip), shifted so its
// measured gamma-boundary length equals ell at the working scale; carries the
// importance weight L^{-(2 alpha + beta - 2Q)/gamma}. With a uniform tip this
// realizes the (field, tip) start state of the growth process.
FixedLengthField sample_fixed_length(const ParamSet& params, double ell, cplx tip,
                                     const GffConfig& cfg, std::uint64_t seed,
                                     double eps = 0.0, int n_arcs = 4096);

}  // namespace lqg::gff
