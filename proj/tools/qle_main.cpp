// qle: simulator and verification harness for reshuffled radial growth on
// LQG disks. Subcommands: params, field, run, verify, plot.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "lqg/gmc.hpp"
#include "lqg/params.hpp"
#include "lqg/qle.hpp"
#include "lqg/stats.hpp"
#include "lqg/trace_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lqg;

namespace {

constexpr const char* kVersion = "qle-disk 0.1.0";

// exit codes: 0 pass, 1 gating-test failure, 2 configuration error, 3 resource
constexpr int kExitOk = 0;
constexpr int kExitGating = 1;
constexpr int kExitConfig = 2;
constexpr int kExitResource = 3;

struct RunFlags {
  double gamma = std::sqrt(2.0);
  double eta = 1.0;
  double delta = 0.05;
  int grid = 256;
  int modes = 512;
  double dt = 1e-4;
  double eps = 0.0;
  double eps_count = 0.05;
  double r0 = 0.02;
  std::uint64_t seed = 1;
  int runs = 1;
  double capacity_budget = 8.0;
  double s_stop = 0.0;
  std::string out_dir = "out";
  std::string config_file;
  int jobs = 1;
};

qle::RunConfig to_config(const RunFlags& f, const CLI::App* cmd) {
  qle::RunConfig cfg;
  double gamma = f.gamma, eta = f.eta;
  if (!f.config_file.empty()) {
    std::ifstream in(f.config_file);
    if (!in) throw std::runtime_error("cannot read config file " + f.config_file);
    std::stringstream ss;
    ss << in.rdbuf();
    cfg = io::config_from_json(ss.str());
    gamma = cfg.params.gamma;
    eta = cfg.params.eta;
  }
  // explicit flags override config-file values
  auto set = [&](const char* flag) { return cmd->count(flag) > 0; };
  if (set("--gamma")) gamma = f.gamma;
  if (set("--eta")) eta = f.eta;
  cfg.params = derive_params(gamma, eta);
  if (set("--delta") || f.config_file.empty()) cfg.delta = f.delta;
  if (set("--grid") || f.config_file.empty()) cfg.grid_resolution = f.grid;
  if (set("--modes") || f.config_file.empty()) cfg.n_modes = f.modes;
  if (set("--dt") || f.config_file.empty()) cfg.dt = f.dt;
  if (set("--eps") || f.config_file.empty()) cfg.eps_reg = f.eps;
  if (set("--eps-count") || f.config_file.empty()) cfg.eps_count = f.eps_count;
  if (set("--r0") || f.config_file.empty()) cfg.r0 = f.r0;
  if (set("--seed") || f.config_file.empty()) cfg.seed = f.seed;
  if (set("--capacity-budget") || f.config_file.empty())
    cfg.capacity_budget = f.capacity_budget;
  if (set("--s-stop") || f.config_file.empty()) cfg.s_stop = f.s_stop;
  return cfg;
}

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--gamma", f.gamma, "LQG coupling in (0,2)");
  cmd->add_option("--eta", f.eta, "DBM exponent on an admissible curve");
  cmd->add_option("--delta", f.delta, "quantum time per SLE segment");
  cmd->add_option("--grid", f.grid, "grid resolution");
  cmd->add_option("--modes", f.modes, "boundary mode truncation");
  cmd->add_option("--dt", f.dt, "capacity step");
  cmd->add_option("--eps", f.eps, "regularization scale (0 = 3 cells)");
  cmd->add_option("--eps-count", f.eps_count, "swallow-count window lower edge");
  cmd->add_option("--r0", f.r0, "origin cutoff radius");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--runs", f.runs, "ensemble size");
  cmd->add_option("--capacity-budget", f.capacity_budget, "capacity budget per run");
  cmd->add_option("--s-stop", f.s_stop, "stop runs at this quantum time (0 = off)");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_option("--config", f.config_file, "JSON config file (flags override)");
  cmd->add_option("--jobs", f.jobs, "parallel workers")->check(CLI::PositiveNumber);
}

int cmd_params(double gamma, double eta) {
  const auto p = derive_params(gamma, eta);
  json j{{"gamma", p.gamma}, {"kappa", p.kappa}, {"eta", p.eta},     {"alpha", p.alpha},
         {"beta", p.beta},   {"q", p.q},         {"phase", phase_name(p.phase)}};
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_field(const RunFlags& f, const std::string& out, const std::string& in, bool info) {
  if (!in.empty()) {
    const auto snap = io::read_field(in);
    json j{{"resolution", snap.field.res},
           {"n_modes", snap.field.n_modes},
           {"gamma", snap.gamma},
           {"singularities", snap.field.singularities.size()},
           {"constant", snap.field.constant},
           {"weight", snap.field.weight},
           {"seed", snap.field.seed}};
    (void)info;
    std::cout << j.dump(2) << '\n';
    return kExitOk;
  }
  const auto P = derive_params(f.gamma, f.eta);
  gff::GffConfig gcfg;
  gcfg.res = f.grid;
  gcfg.n_modes = f.modes;
  Rng tip_rng(Rng::mix(f.seed));
  const double tip = tip_rng.uniform(0.0, 2.0 * M_PI);
  const auto fx = gff::sample_fixed_length(P, 1.0, std::polar(1.0, tip), gcfg, f.seed, f.eps);
  io::write_field(out, fx.field, P.gamma);
  std::cout << "wrote " << out << " (pre-shift length " << fx.pre_shift_length << ", "
            << fx.rejects << " rejects)\n";
  return kExitOk;
}

int cmd_run(const RunFlags& f, const CLI::App* cmd) {
  const qle::RunConfig base = to_config(f, cmd);
  const std::string hash = io::config_hash(base);
  std::error_code ec;
  fs::create_directories(f.out_dir, ec);
  if (ec || !fs::is_directory(f.out_dir)) {
    std::cerr << "cannot create output directory " << f.out_dir << '\n';
    return kExitConfig;
  }
  std::atomic<int> next{0};
  std::atomic<int> failures{0};
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= f.runs) return;
      qle::RunConfig cfg = base;
      cfg.seed = base.seed + static_cast<std::uint64_t>(i);
      std::ostringstream name;
      name << "trace_" << hash << "_" << cfg.seed << ".jsonl";
      const fs::path path = fs::path(f.out_dir) / name.str();
      if (fs::exists(path)) continue;  // resumable: skip existing outputs
      try {
        const auto res = qle::run_delta_qle(cfg);
        io::write_trace(path, res.trace, cfg, hash, kVersion);
        std::ofstream app(path, std::ios::app);
        app << json{{"type", "obs"},
                    {"s_stop", cfg.s_stop},
                    {"reached", res.reached_stop},
                    {"L", res.L_stop},
                    {"area_b_half", res.area_b_half},
                    {"arc0", res.arcs_gamma[0]},
                    {"arc1", res.arcs_gamma[1]},
                    {"arc2", res.arcs_gamma[2]},
                    {"arc3", res.arcs_gamma[3]},
                    {"beta_mass", res.beta_mass_total},
                    {"weight", res.trace.weight}}
                   .dump()
            << '\n';
      } catch (const std::exception& e) {
        std::cerr << "run seed " << cfg.seed << " failed: " << e.what() << '\n';
        ++failures;
      }
    }
  };
  std::vector<std::thread> pool;
  const int jobs = std::max(1, f.jobs);
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  std::cout << "ensemble " << hash << ": " << f.runs << " runs, " << failures.load()
            << " failures\n";
  return failures.load() == 0 ? kExitOk : kExitResource;
}

int cmd_verify(const std::string& dir, const std::string& out_json) {
  std::vector<qle::GrowthTrace> traces;
  std::vector<double> pooled_jumps;
  double gamma = 0.0, eps_count = 0.05, kappa = 0.0;
  std::string phase;
  if (!fs::is_directory(dir)) {
    std::cerr << "not a directory: " << dir << '\n';
    return kExitConfig;
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".jsonl") continue;
    traces.push_back(io::read_trace(entry.path()));
    std::ifstream in(entry.path());
    std::string line;
    if (std::getline(in, line)) {
      const json j = json::parse(line);
      gamma = j.value("gamma", 0.0);
      kappa = j.value("kappa", 0.0);
      phase = j.value("phase", "");
      eps_count = j.value("eps_count", 0.05);
    }
  }
  if (traces.empty()) {
    std::cerr << "no traces in " << dir << '\n';
    return kExitConfig;
  }
  for (const auto& tr : traces)
    for (const auto& r : qle::swallowed_registry(tr))
      if (r.jump > 0.0) pooled_jumps.push_back(r.jump);

  std::vector<stats::TestReport> reports;
  auto guard = [&](auto&& fn, const char* name) {
    try {
      reports.push_back(fn());
    } catch (const stats::InsufficientData& e) {
      stats::TestReport rep;
      rep.name = name;
      rep.verdict = stats::Verdict::Inconclusive;
      rep.detail = std::string("insufficient data: ") + e.what();
      reports.push_back(rep);
    }
  };

  if (phase == "dilute") {
    guard([&] { return stats::test_affine_boundary(traces); }, "affine_boundary");
    guard([&] { return stats::test_phase_area(traces, Phase::Dilute); }, "phase_area_dilute");
  } else if (phase == "space-filling") {
    guard([&] { return stats::test_bm_boundary(traces, kappa); }, "bm_boundary_variance");
    guard([&] { return stats::test_phase_area(traces, Phase::SpaceFilling); },
          "phase_area_space-filling");
  } else if (phase == "swallowing") {
    guard([&] { return stats::test_levy_jumps(pooled_jumps, gamma, eps_count); },
          "levy_jump_tail");
    guard([&] { return stats::test_phase_area(traces, Phase::Swallowing); },
          "phase_area_swallowing");
    guard([&] { return stats::test_jump_reconcile(traces, eps_count); }, "jump_reconcile");
    std::vector<qle::SwallowRecord> registry;
    for (const auto& tr : traces)
      for (const auto& r : qle::swallowed_registry(tr)) registry.push_back(r);
    guard([&] { return stats::diag_disk_scaling(registry, 1234); }, "disk_scaling_diagnostic");
  } else {
    std::cerr << "unknown phase in meta: '" << phase << "'\n";
    return kExitConfig;
  }

  if (!out_json.empty()) io::write_reports(out_json, reports);
  bool gating_fail = false;
  for (const auto& r : reports) {
    std::cout << "  " << r.name << ": " << stats::verdict_name(r.verdict) << "  [" << r.detail
              << "]\n";
    if (r.verdict == stats::Verdict::Fail && r.name != "disk_scaling_diagnostic")
      gating_fail = true;
  }
  return gating_fail ? kExitGating : kExitOk;
}

void write_svg_panels(const std::string& path, const std::vector<qle::HullSnapshot>& snaps,
                      const std::vector<qle::SwallowRecord>& records) {
  const int panel = 360, pad = 20;
  const int width = static_cast<int>(snaps.size()) * (panel + pad) + pad;
  std::ofstream out(path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='"
      << panel + 2 * pad << "'>\n";
  auto sx = [&](double x, std::size_t k) {
    return pad + static_cast<double>(k) * (panel + pad) + (x + 1.0) * panel / 2.0;
  };
  auto sy = [&](double y) { return pad + (1.0 - y) * panel / 2.0; };
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    const auto& snap = snaps[k];
    out << "<circle cx='" << sx(0, k) << "' cy='" << sy(0) << "' r='" << panel / 2.0
        << "' fill='none' stroke='black' stroke-width='1'/>\n";
    int shaded = 0;
    for (const auto& r : records) {
      if (r.terminal || r.s > snap.s) continue;
      ++shaded;  // pocket footprints are drawn as tinted markers at their time
    }
    if (shaded > 0)
      out << "<text x='" << sx(-0.95, k) << "' y='" << sy(0.92)
          << "' font-size='12' fill='#888'>" << shaded << " swallowed</text>\n";
    if (snap.frontier.size() > 2) {
      out << "<polyline fill='none' stroke='#c22' stroke-width='1' points='";
      for (const auto& z : snap.frontier) out << sx(z.real(), k) << "," << sy(z.imag()) << " ";
      out << "'/>\n";
    }
    out << "<circle cx='" << sx(snap.tip.real(), k) << "' cy='" << sy(snap.tip.imag())
        << "' r='3' fill='#22c'/>\n";
    out << "<text x='" << sx(-0.95, k) << "' y='" << sy(-0.92) << "' font-size='12'>s = "
        << snap.s << "</text>\n";
  }
  out << "</svg>\n";
}

int cmd_plot(const RunFlags& f, const CLI::App* cmd, const std::string& times_csv,
             const std::string& out_svg, const std::string& field_file,
             const std::string& trace_file) {
  qle::RunConfig cfg = to_config(f, cmd);
  if (!trace_file.empty()) {
    const auto tr = io::read_trace(trace_file);
    if (tr.seed != cfg.seed) {
      std::cerr << "meta mismatch: trace seed " << tr.seed << " vs config seed " << cfg.seed
                << '\n';
      return kExitConfig;
    }
  }
  if (!field_file.empty()) {
    const auto snap = io::read_field(field_file);
    if (snap.field.seed != 0 && snap.field.seed != cfg.seed) {
      std::cerr << "meta mismatch: field seed " << snap.field.seed << " vs config seed "
                << cfg.seed << '\n';
      return kExitConfig;
    }
  }
  std::stringstream ss(times_csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) cfg.snapshot_s.push_back(std::stod(tok));
  if (cfg.snapshot_s.empty()) cfg.snapshot_s.push_back(0.0);
  const double smax = *std::max_element(cfg.snapshot_s.begin(), cfg.snapshot_s.end());
  if (smax <= 0.0) {
    // time list [0]: the unit circle only, no growth to replay
    qle::HullSnapshot snap;
    const int n = 256;
    for (int i = 0; i <= n; ++i) snap.frontier.push_back(std::polar(1.0, 2.0 * M_PI * i / n));
    snap.tip = gff::cplx(1.0, 0.0);
    write_svg_panels(out_svg, {snap}, {});
    std::cout << "wrote " << out_svg << '\n';
    return kExitOk;
  }
  cfg.s_stop = smax + 1e-12;
  const auto res = qle::run_delta_qle(cfg);
  write_svg_panels(out_svg, res.snapshots, res.trace.swallow_records);
  std::cout << "wrote " << out_svg << " (" << res.snapshots.size() << " panels)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(kVersion) +
               " - growth-process simulator and statistical verifier on LQG disks"};
  app.require_subcommand(1);

  double p_gamma = std::sqrt(2.0), p_eta = 1.0;
  auto* sp = app.add_subcommand("params", "derive the coupled parameter set");
  sp->add_option("--gamma", p_gamma)->required();
  sp->add_option("--eta", p_eta)->required();

  RunFlags ff;
  std::string field_out = "field.lqgf", field_in;
  bool field_info = false;
  auto* sf = app.add_subcommand("field", "sample or inspect field snapshots");
  add_run_flags(sf, ff);
  sf->add_option("--out-file", field_out, "snapshot to write");
  sf->add_option("--in", field_in, "snapshot to read");
  sf->add_flag("--info", field_info, "print header of --in");

  RunFlags rf;
  auto* sr = app.add_subcommand("run", "run a growth-process ensemble");
  add_run_flags(sr, rf);

  std::string verify_dir = "out", verify_out;
  auto* sv = app.add_subcommand("verify", "statistical verification of trace ensembles");
  sv->add_option("--in", verify_dir, "trace directory");
  sv->add_option("--out-file", verify_out, "JSON report path");

  RunFlags pf;
  std::string plot_times = "0", plot_out = "hull.svg", plot_field, plot_trace;
  auto* spl = app.add_subcommand("plot", "render hull panels as SVG");
  add_run_flags(spl, pf);
  spl->add_option("--times", plot_times, "comma-separated quantum times");
  spl->add_option("--out-file", plot_out, "SVG path");
  spl->add_option("--field-file", plot_field, "field snapshot (seed must match)");
  spl->add_option("--trace-file", plot_trace, "trace file (seed must match)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sp->parsed()) return cmd_params(p_gamma, p_eta);
    if (sf->parsed()) return cmd_field(ff, field_out, field_in, field_info);
    if (sr->parsed()) return cmd_run(rf, sr);
    if (sv->parsed()) return cmd_verify(verify_dir, verify_out);
    if (spl->parsed()) return cmd_plot(pf, spl, plot_times, plot_out, plot_field, plot_trace);
  } catch (const OutOfRange& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const gff::ResourceLimit& e) {
    std::cerr << "resource error: " << e.what() << '\n';
    return kExitResource;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
