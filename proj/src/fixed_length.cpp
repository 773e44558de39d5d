#include <cmath>

#include "lqg/gff.hpp"
#include "lqg/gmc.hpp"
#include "lqg/params.hpp"

namespace lqg::gff {

FixedLengthField sample_fixed_length(const ParamSet& params, double ell, cplx tip,
                                     const GffConfig& cfg, std::uint64_t seed,
                                     double eps, int n_arcs) {
  if (!(ell > 0.0)) throw std::invalid_argument("sample_fixed_length: ell must be positive");
  if (!(params.beta < params.q)) throw std::invalid_argument("sample_fixed_length: beta >= Q");

  const int max_retries = 64;
  int rejects = 0;
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    FieldSample f = sample_gff(cfg, seed + 0x9e37ULL * attempt);
    f = add_insertions(std::move(f), params.alpha, tip, params.beta);
    const auto bm = gmc::boundary_measure(f, params.gamma, eps, n_arcs);
    const double L = bm.total();
    if (!(L > 1e-280) || !std::isfinite(L)) {
      ++rejects;
      continue;
    }
    f.constant += (2.0 / params.gamma) * std::log(ell / L);
    f.weight = std::pow(L, -(2.0 * params.alpha + params.beta - 2.0 * params.q) / params.gamma);
    FixedLengthField out;
    out.field = std::move(f);
    out.pre_shift_length = L;
    out.rejects = rejects;
    return out;
  }
  throw DegenerateMass("boundary length underflowed in " + std::to_string(max_retries) +
                       " attempts");
}

}  // namespace lqg::gff
