#include "lqg/trace_io.hpp"

#include <fstream>

#include <json.hpp>

namespace lqg::io {

using nlohmann::json;

namespace {

json sample_to_json(const qle::TraceSample& s) {
  return json{{"type", "sample"},   {"s", s.s},
              {"t", s.t},           {"L", s.L},
              {"L_gmc", s.L_gmc},   {"A", s.A_explored},
              {"A_pockets", s.A_pockets},
              {"footprint", s.footprint_mass}, {"side_disc", s.side_discrepancy}};
}

}  // namespace

void write_trace(const std::filesystem::path& path, const qle::GrowthTrace& trace,
                 const qle::RunConfig& cfg, const std::string& cfg_hash,
                 const std::string& version) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open trace for writing: " + path.string());
  json meta{{"type", "meta"},
            {"seed", trace.seed},
            {"gamma", cfg.params.gamma},
            {"eta", cfg.params.eta},
            {"kappa", cfg.params.kappa},
            {"phase", phase_name(cfg.params.phase)},
            {"delta", cfg.delta},
            {"grid", cfg.grid_resolution},
            {"dt", cfg.dt},
            {"eps", cfg.eps()},
            {"eps_count", cfg.eps_count},
            {"r0", cfg.r0},
            {"weight", trace.weight},
            {"total_area", trace.total_area},
            {"mean_cell_mass", trace.mean_cell_mass},
            {"config_hash", cfg_hash},
            {"version", version}};
  out << meta.dump() << '\n';
  std::size_t si = 0, ti = 0, wi = 0;
  // interleave by time for an append-only stream
  while (si < trace.samples.size() || ti < trace.tip_events.size() ||
         wi < trace.swallow_records.size()) {
    const double ss = si < trace.samples.size() ? trace.samples[si].s : 1e300;
    const double ts = ti < trace.tip_events.size() ? trace.tip_events[ti].s : 1e300;
    const double ws = wi < trace.swallow_records.size() ? trace.swallow_records[wi].s : 1e300;
    if (ss <= ts && ss <= ws) {
      out << sample_to_json(trace.samples[si++]).dump() << '\n';
    } else if (ts <= ws) {
      const auto& e = trace.tip_events[ti++];
      out << json{{"type", "tip"}, {"s", e.s}, {"angle", e.angle},
                  {"resolution_limited", e.resolution_limited}}
                 .dump()
          << '\n';
    } else {
      const auto& r = trace.swallow_records[wi++];
      out << json{{"type", "swallow"}, {"s", r.s},       {"t", r.t},
                  {"jump", r.jump},    {"area", r.area}, {"n_cells", r.n_cells},
                  {"terminal", r.terminal}}
                 .dump()
          << '\n';
    }
  }
  out << json{{"type", "end"},
              {"s", trace.duration_s},
              {"t", trace.duration_t},
              {"budget_exhausted", trace.budget_exhausted},
              {"terminal_live_mass", trace.terminal_live_mass},
              {"footprint_mass", trace.footprint_mass},
              {"near_singularity", trace.near_singularity_count}}
             .dump()
      << '\n';
}

qle::GrowthTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace: " + path.string());
  qle::GrowthTrace tr;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const std::string type = j.value("type", "");
    if (type == "meta") {
      tr.seed = j.value("seed", 0ULL);
      tr.weight = j.value("weight", 1.0);
      tr.total_area = j.value("total_area", 0.0);
      tr.mean_cell_mass = j.value("mean_cell_mass", 0.0);
    } else if (type == "sample") {
      qle::TraceSample s;
      s.s = j.value("s", 0.0);
      s.t = j.value("t", 0.0);
      s.L = j.value("L", 0.0);
      s.L_gmc = j.value("L_gmc", s.L);
      s.A_explored = j.value("A", 0.0);
      s.A_pockets = j.value("A_pockets", 0.0);
      s.footprint_mass = j.value("footprint", 0.0);
      s.side_discrepancy = j.value("side_disc", 0.0);
      tr.samples.push_back(s);
    } else if (type == "tip") {
      tr.tip_events.push_back(
          {j.value("s", 0.0), j.value("angle", 0.0), j.value("resolution_limited", false)});
    } else if (type == "swallow") {
      qle::SwallowRecord r;
      r.s = j.value("s", 0.0);
      r.t = j.value("t", 0.0);
      r.jump = j.value("jump", 0.0);
      r.area = j.value("area", 0.0);
      r.n_cells = j.value("n_cells", 0);
      r.terminal = j.value("terminal", false);
      tr.swallow_records.push_back(r);
    } else if (type == "end") {
      tr.duration_s = j.value("s", 0.0);
      tr.duration_t = j.value("t", 0.0);
      tr.budget_exhausted = j.value("budget_exhausted", false);
      tr.terminal_live_mass = j.value("terminal_live_mass", 0.0);
      tr.footprint_mass = j.value("footprint_mass", 0.0);
      tr.near_singularity_count = j.value("near_singularity", 0);
    }
  }
  return tr;
}

namespace {

template <class T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void write_field(const std::filesystem::path& path, const gff::FieldSample& f, double gamma) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open field snapshot for writing");
  out.write("LQGF", 4);
  put<std::uint32_t>(out, 1u);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(f.res));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(f.n_modes));
  put<double>(out, gamma);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(f.singularities.size()));
  for (const auto& s : f.singularities) {
    put<double>(out, s.location.real());
    put<double>(out, s.location.imag());
    put<double>(out, s.coeff);
  }
  out.write(reinterpret_cast<const char*>(f.grid.data()),
            static_cast<std::streamsize>(sizeof(double)) * f.res * f.res);
  for (int n = 0; n < f.n_modes; ++n) {
    put<double>(out, f.mode_a(n));
    put<double>(out, f.mode_b(n));
  }
  put<double>(out, f.constant);
  put<double>(out, f.weight);
  put<std::uint64_t>(out, f.seed);
}

FieldSnapshot read_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open field snapshot: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (std::string(magic, 4) != "LQGF") throw std::runtime_error("bad field magic");
  const auto version = get<std::uint32_t>(in);
  if (version != 1u) throw std::runtime_error("unsupported field version");
  FieldSnapshot snap;
  gff::FieldSample& f = snap.field;
  f.res = static_cast<int>(get<std::uint32_t>(in));
  f.n_modes = static_cast<int>(get<std::uint32_t>(in));
  snap.gamma = get<double>(in);
  const auto nsing = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < nsing; ++i) {
    const double x = get<double>(in);
    const double y = get<double>(in);
    const double c = get<double>(in);
    f.singularities.push_back({gff::cplx(x, y), c});
  }
  f.grid.resize(f.res, f.res);
  in.read(reinterpret_cast<char*>(f.grid.data()),
          static_cast<std::streamsize>(sizeof(double)) * f.res * f.res);
  f.mode_a.resize(f.n_modes);
  f.mode_b.resize(f.n_modes);
  for (int n = 0; n < f.n_modes; ++n) {
    f.mode_a(n) = get<double>(in);
    f.mode_b(n) = get<double>(in);
  }
  f.constant = get<double>(in);
  f.weight = get<double>(in);
  f.seed = get<std::uint64_t>(in);
  if (!in) throw std::runtime_error("truncated field snapshot");
  return snap;
}

std::string report_to_json(const stats::TestReport& rep) {
  json j{{"name", rep.name},
         {"statistic", rep.statistic},
         {"target", rep.target},
         {"tolerance", rep.tolerance},
         {"n_samples", rep.n_samples},
         {"ess", rep.effective_sample_size},
         {"verdict", stats::verdict_name(rep.verdict)},
         {"detail", rep.detail}};
  if (rep.p_value >= 0.0) j["p_value"] = rep.p_value;
  return j.dump();
}

void write_reports(const std::filesystem::path& path,
                   const std::vector<stats::TestReport>& reports) {
  std::ofstream out(path);
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(json::parse(report_to_json(r)));
  out << arr.dump(2) << '\n';
}

std::string config_to_json(const qle::RunConfig& cfg) {
  json j{{"gamma", cfg.params.gamma},
         {"eta", cfg.params.eta},
         {"delta", cfg.delta},
         {"ell0", cfg.ell0},
         {"r0", cfg.r0},
         {"grid_resolution", cfg.grid_resolution},
         {"n_modes", cfg.n_modes},
         {"dt", cfg.dt},
         {"eps_reg", cfg.eps_reg},
         {"eps_count", cfg.eps_count},
         {"seed", cfg.seed},
         {"capacity_budget", cfg.capacity_budget},
         {"s_stop", cfg.s_stop},
         {"n_arcs_chain", cfg.n_arcs_chain},
         {"quad_chain", cfg.quad_chain}};
  return j.dump(2);
}

qle::RunConfig config_from_json(const std::string& text) {
  const json j = json::parse(text);
  qle::RunConfig cfg;
  const double gamma = j.at("gamma").get<double>();
  const double eta = j.at("eta").get<double>();
  cfg.params = derive_params(gamma, eta);
  cfg.delta = j.value("delta", cfg.delta);
  cfg.ell0 = j.value("ell0", cfg.ell0);
  cfg.r0 = j.value("r0", cfg.r0);
  cfg.grid_resolution = j.value("grid_resolution", cfg.grid_resolution);
  cfg.n_modes = j.value("n_modes", cfg.n_modes);
  cfg.dt = j.value("dt", cfg.dt);
  cfg.eps_reg = j.value("eps_reg", cfg.eps_reg);
  cfg.eps_count = j.value("eps_count", cfg.eps_count);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.capacity_budget = j.value("capacity_budget", cfg.capacity_budget);
  cfg.s_stop = j.value("s_stop", cfg.s_stop);
  cfg.n_arcs_chain = j.value("n_arcs_chain", cfg.n_arcs_chain);
  cfg.quad_chain = j.value("quad_chain", cfg.quad_chain);
  return cfg;
}

std::string config_hash(const qle::RunConfig& cfg) {
  const std::string s = config_to_json(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace lqg::io
