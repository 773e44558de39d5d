#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lqg/gff.hpp"
#include "lqg/qle.hpp"
#include "lqg/stats.hpp"

namespace lqg::io {

// Append-only JSON-lines trace: records {meta, sample, tip, swallow, end}.
void write_trace(const std::filesystem::path& path, const qle::GrowthTrace& trace,
                 const qle::RunConfig& cfg, const std::string& config_hash,
                 const std::string& version);

qle::GrowthTrace read_trace(const std::filesystem::path& path);

// Binary field snapshot:
// header { magic "LQGF", version u32, resolution u32, n_modes u32, gamma f64,
//          singularity count u32, (x f64, y f64, coeff f64) each },
// then the row-major f64 grid, then interleaved (a_n, b_n) mode pairs, then a
// trailer { constant f64, weight f64, seed u64 }.
void write_field(const std::filesystem::path& path, const gff::FieldSample& f, double gamma);

struct FieldSnapshot {
  gff::FieldSample field;
  double gamma = 0.0;
};
FieldSnapshot read_field(const std::filesystem::path& path);

std::string report_to_json(const stats::TestReport& rep);
void write_reports(const std::filesystem::path& path,
                   const std::vector<stats::TestReport>& reports);

// FNV-1a over the canonical config rendering; embedded in outputs.
std::string config_hash(const qle::RunConfig& cfg);
std::string config_to_json(const qle::RunConfig& cfg);
qle::RunConfig config_from_json(const std::string& text);

}  // namespace lqg::io
