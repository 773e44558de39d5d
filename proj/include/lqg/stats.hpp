#pragma once

#include <string>
#include <vector>

#include "lqg/params.hpp"
#include "lqg/qle.hpp"
#include "lqg/rng.hpp"

namespace lqg::stats {

enum class Verdict { Pass, Fail, Inconclusive };

struct TestReport {
  std::string name;
  double statistic = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  double p_value = -1.0;  // < 0 when not applicable
  int n_samples = 0;
  double effective_sample_size = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  std::string detail;
};

const char* verdict_name(Verdict v);

struct InsufficientData : std::runtime_error {
  explicit InsufficientData(const std::string& w) : std::runtime_error(w) {}
};

// (sum w)^2 / sum w^2
double effective_sample_size(const std::vector<double>& w);

// Weighted two-sample Kolmogorov-Smirnov distance.
double weighted_ks(const std::vector<double>& x1, const std::vector<double>& w1,
                   const std::vector<double>& x2, const std::vector<double>& w2);

// p-value by weighted bootstrap from the pooled sample (n_boot resamples).
double ks_bootstrap_p(const std::vector<double>& x1, const std::vector<double>& w1,
                      const std::vector<double>& x2, const std::vector<double>& w2,
                      int n_boot, Rng& rng);

// Hill tail-index estimator on the top fraction of the sample.
double hill_estimator(std::vector<double> x, double top_fraction = 0.2);

// Ordinary least squares slope of y on x.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y,
                 double* intercept = nullptr);

// --- verification operations -----------------------------------------------

using qle::GrowthTrace;
using qle::SwallowRecord;

// Prop: space-filling boundary length is Brownian with variance 4 tan(2pi/kappa) s.
TestReport test_bm_boundary(const std::vector<GrowthTrace>& traces, double kappa,
                            int min_surviving = 300);

// Prop: dilute boundary length satisfies L_s = ell + 2s exactly (bookkeeping),
// plus the two-sided arc agreement diagnostic.
TestReport test_affine_boundary(const std::vector<GrowthTrace>& traces,
                                double arc_median_target = 0.10);

// Jump-law tail: Hill index of pooled jump sizes vs 4/gamma^2, +-20%.
TestReport test_levy_jumps(const std::vector<double>& jumps, double gamma,
                           double eps_count, int min_jumps = 500);

struct ObservableSet {
  // one vector per observable; parallel weights
  std::vector<std::vector<double>> obs;
  std::vector<double> weights;
  std::vector<std::string> names;
};

// Weighted two-sample KS per observable, Bonferroni-corrected at p > 0.01.
TestReport test_stationarity(const ObservableSet& at0, const ObservableSet& at1,
                             std::uint64_t seed, double p_threshold = 0.01,
                             int n_boot = 1000);

// DBM exponent: slope of log beta-mass on log harmonic measure across
// equal-gamma-mass boundary intervals.
TestReport test_dbm_exponent(const std::vector<gff::FieldSample>& fields,
                             const ParamSet& params, int n_intervals, double eps = 0.0,
                             int min_fields = 10);

// Phase dichotomy checks per Theorem-level behaviour.
TestReport test_phase_area(const std::vector<GrowthTrace>& traces, Phase phase);

// Swallowing-phase reconciliation of registry jumps against L_s drops.
TestReport test_jump_reconcile(const std::vector<GrowthTrace>& traces, double eps_count,
                               double median_target = 0.15);

// Non-gating: log-log slope of median swallowed area vs jump size (ref. 2).
TestReport diag_disk_scaling(const std::vector<SwallowRecord>& registry,
                             std::uint64_t seed);

}  // namespace lqg::stats
