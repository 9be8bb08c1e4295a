// egf: command-line front end.
//
// Exit codes: 0 success, 1 validation failure, 2 parse error, 3 I/O error,
// 4 divergence (CFL violation, PDE blow-up, population overflow).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <regex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "egf/config.hpp"
#include "egf/diagnostics.hpp"
#include "egf/ibm.hpp"
#include "egf/io.hpp"
#include "egf/model.hpp"
#include "egf/pde.hpp"

namespace fs = std::filesystem;
using namespace egf;

#ifndef EGF_VERSION
#define EGF_VERSION "0.0.0"
#endif

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kParse = 2;
constexpr int kIo = 3;
constexpr int kDiverged = 4;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

fs::path default_out(const std::string& command, const std::string& hash) {
  const char* root = std::getenv("EGF_OUT_ROOT");
  return fs::path(root && *root ? root : "out") / command / hash;
}

// Collects written files; the manifest itself goes last.
class Outputs {
 public:
  Outputs(fs::path dir, std::string command) : dir_(std::move(dir)), command_(std::move(command)), start_(utc_now()) {}

  const fs::path& dir() const { return dir_; }

  void text(const std::string& name, const std::string& body) {
    write_text(dir_ / name, body);
    files_.push_back(name);
  }
  void json(const std::string& name, const nlohmann::ordered_json& j) { text(name, j.dump(2) + "\n"); }

  void manifest(const std::string& hash, std::uint64_t seed, const std::vector<std::string>& argv) {
    nlohmann::ordered_json m = {{"config_hash", hash},   {"seed", seed},          {"code_version", EGF_VERSION},
                                {"command", command_},   {"argv", argv},          {"started_at", start_},
                                {"finished_at", utc_now()}, {"files", files_}};
    write_text(dir_ / "manifest.json", m.dump(2) + "\n");
  }

 private:
  fs::path dir_;
  std::string command_;
  std::string start_;
  std::vector<std::string> files_;
};

bool is_h0_warning(const Violation& v) {
  static const std::set<std::string> h0 = {"gamma = alpha", "C_gamma > C_alpha", "g(x, 0) < 0", "g(x, R_max) > 0"};
  return h0.count(v.name) > 0;
}

int cmd_validate(const std::string& path) {
  const RunConfig cfg = load_config(path);
  const ModelParams p = cfg.model_params();
  AdmissibilityReport rep = validate_weight_region(cfg.model, cfg.kappa1, cfg.kappa2);
  rep.merge(validate_finallejd(cfg.model, cfg.kappa1, cfg.kappa2));
  rep.merge(check_h0_numeric(p, log_grid(1e-3, 1e3, 400)));
  bool failed = !rep.weight_ok || !rep.finallejd_ok || !rep.h1_ok;
  std::vector<std::string> warnings;
  for (const auto& v : rep.violated_constraints) {
    if (is_h0_warning(v))
      warnings.push_back(v.name + ": " + v.detail);
    else
      failed = true;
  }
  auto j = to_json(rep);
  j["warnings"] = warnings;
  j["status"] = failed ? "fail" : (warnings.empty() ? "pass" : "pass_with_warnings");
  std::cout << j.dump(2) << "\n";
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  return failed ? kInvalid : kOk;
}

int cmd_run_ibm(const std::string& path, std::size_t replicas, std::string out, std::size_t threads,
                std::optional<std::uint64_t> seed, const std::vector<std::string>& argv) {
  RunConfig cfg = load_config(path);
  if (seed) cfg.seed = *seed;
  const std::string hash = config_hash(cfg);
  Outputs o(out.empty() ? default_out("run-ibm", hash) : fs::path(out), "run-ibm");
  const SimConfig sc = cfg.sim_config();
  const auto trajs = run_ensemble(sc, replicas, threads);
  std::int64_t violations = 0;
  for (const auto& t : trajs) violations += biomass_audit(t, sc.model);
  const EnsembleSummary summary = summarize_ensemble(trajs);

  o.text("config.ini", serialize_config(cfg));
  o.text("timeseries.csv", timeseries_csv(trajs));
  auto events = events_json(trajs);
  events["K"] = cfg.k;
  events["biomass_violations"] = violations;
  o.json("events.json", events);
  for (const auto& [t, h] : summary.snapshots) o.text("snapshot_" + time_tag(t) + ".csv", histogram_csv(h));
  o.text("ensemble_summary.csv", ensemble_summary_csv(summary));
  o.manifest(hash, cfg.seed, argv);
  std::cerr << "run-ibm: " << replicas << " replicas, K = " << cfg.k << ", biomass violations " << violations
            << ", output " << o.dir().string() << "\n";
  return kOk;
}

DensityTrajectory run_pde(const RunConfig& cfg) {
  const ModelParams p = cfg.model_params();
  const Grid grid = Grid::aligned(cfg.model.x0, cfg.pde.nodes_per_x0, cfg.pde.x_max_grid);
  const DensityField init = initial_field(grid, cfg.x_min, cfg.x_max, cfg.r0);
  const double dt = cfg.pde.dt > 0.0 ? cfg.pde.dt : default_dt(p, grid);
  return solve(p, grid, init, cfg.t_end, dt, cfg.pde.record_dt, cfg.weight(),
               PdeOptions{cfg.freeze_resource, cfg.pde.mass_limit});
}

int cmd_run_pde(const std::string& path, std::string out, const std::vector<std::string>& argv) {
  const RunConfig cfg = load_config(path);
  const std::string hash = config_hash(cfg);
  Outputs o(out.empty() ? default_out("run-pde", hash) : fs::path(out), "run-pde");
  const DensityTrajectory traj = run_pde(cfg);
  o.text("config.ini", serialize_config(cfg));
  o.text("pde_timeseries.csv", pde_timeseries_csv(traj));
  for (double t : cfg.snapshots) {
    std::size_t best = 0;
    for (std::size_t i = 0; i < traj.times.size(); ++i)
      if (std::abs(traj.times[i] - t) < std::abs(traj.times[best] - t)) best = i;
    if (std::abs(traj.times[best] - t) > 1e-9 * std::max(1.0, t)) continue;
    o.text("pde_density_" + time_tag(traj.times[best]) + ".csv", pde_density_csv(traj.grid, traj.densities[best]));
  }
  auto meta = pde_meta_json(traj);
  meta["biomass_violations"] = biomass_audit(traj, cfg.model_params());
  meta["outflow_right_fraction"] = traj.outflow_right;
  o.json("pde_meta.json", meta);
  o.manifest(hash, cfg.seed, argv);
  std::cerr << "run-pde: " << traj.steps << " steps of dt = " << traj.dt << ", output " << o.dir().string() << "\n";
  return kOk;
}

std::pair<double, double> parse_window(const std::string& w) {
  const auto colon = w.find(':');
  if (colon == std::string::npos) throw ConfigError("--window expects t0:t1, got '" + w + "'");
  try {
    const double a = std::stod(w.substr(0, colon));
    const double b = std::stod(w.substr(colon + 1));
    if (!(b >= a)) throw ConfigError("--window: t1 must not precede t0");
    return {a, b};
  } catch (const std::logic_error&) {
    throw ConfigError("--window expects t0:t1, got '" + w + "'");
  }
}

int cmd_compare(const std::string& ibm_dir, const std::string& pde_dir, const std::string& window, std::string out,
                const std::vector<std::string>& argv) {
  const auto [t0, t1] = parse_window(window);
  const RunConfig cfg = load_config((fs::path(ibm_dir) / "config.ini").string());
  if (!fs::exists(fs::path(ibm_dir) / "timeseries.csv")) throw IoError("missing " + ibm_dir + "/timeseries.csv");
  auto trajs = read_timeseries_csv(fs::path(ibm_dir) / "timeseries.csv");
  for (auto& t : trajs) t.k = cfg.k;
  std::int64_t violations = 0;
  for (const auto& t : trajs) violations += biomass_audit(t, cfg.model_params());
  EnsembleSummary summary = summarize_ensemble(trajs);

  const DensityTrajectory pde = read_pde_outputs(pde_dir);
  const std::regex snap_re("snapshot_(.+)\\.csv");
  std::vector<double> snap_times;
  for (const auto& entry : fs::directory_iterator(ibm_dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, snap_re)) continue;
    const double t = std::stod(m[1].str());
    if (!fs::exists(fs::path(pde_dir) / ("pde_density_" + time_tag(t) + ".csv"))) continue;
    summary.snapshots[t] = read_histogram_csv(entry.path());
    snap_times.push_back(t);
  }
  std::sort(snap_times.begin(), snap_times.end());

  ComparisonReport rep = compare_to_pde(summary, pde, t0, t1, snap_times);
  rep.biomass_violations = violations;
  const std::string hash = config_hash(cfg);
  Outputs o(out.empty() ? default_out("compare", hash) : fs::path(out), "compare");
  o.json("comparison_report.json", comparison_json(rep));
  o.text("ensemble_summary.csv", ensemble_summary_csv(summary));
  o.manifest(hash, cfg.seed, argv);
  std::cerr << "compare: sup-relative error of N = " << rep.errors["N"].sup_rel << ", output " << o.dir().string()
            << "\n";
  return kOk;
}

int cmd_figures(const std::string& path, std::string out, std::size_t replicas, std::size_t threads,
                const std::vector<std::int64_t>& ks, std::optional<std::uint64_t> seed,
                const std::vector<std::string>& argv) {
  RunConfig cfg = load_config(path);
  if (seed) cfg.seed = *seed;
  const std::string hash = config_hash(cfg);
  Outputs o(out.empty() ? default_out("figures", hash) : fs::path(out), "figures");
  const WeightFunction w = cfg.weight();

  // Weight shape.
  std::string fig1 = "x,omega,omega_deriv\n";
  for (double x : log_grid(1e-3, 1e3, 300))
    fig1 += format_real(x) + "," + format_real(w.eval(x)) + "," + format_real(w.deriv(x)) + "\n";
  o.text("figure1_weight.csv", fig1);

  // Figures 2-3: admissible regions from the validator.
  std::string fig2 = "alpha,delta,beta,weight_ok\n";
  std::string fig3 = "alpha,delta,kappa,weight_ok\n";
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 50; ++j) {
      const double u = -3.0 + 4.0 * i / 49.0;
      const double v = -3.0 + 4.0 * j / 49.0;
      AllometricParams a = cfg.model;
      a.alpha = 0.0;
      a.delta = u;
      a.beta = v;
      const double k1 = std::max(0.0, -u);
      const double k2 = u < -1.0 ? k1 : std::max(k1, (1.0 - u) / 2.0);
      fig2 += "0," + format_real(u) + "," + format_real(v) + "," +
              (validate_weight_region(a, k1, k2).weight_ok ? "1" : "0") + "\n";
      AllometricParams b = cfg.model;
      b.alpha = 1.0;
      b.delta = u;
      b.beta = -10.0;  // keep the birth constraint out of the kappa picture
      fig3 += "1," + format_real(u) + "," + format_real(v) + "," +
              (validate_weight_region(b, v, v).weight_ok ? "1" : "0") + "\n";
    }
  }
  o.text("figure2_region.csv", fig2);
  o.text("figure3_region.csv", fig3);

  // Three population-size regimes against the PDE.
  const DensityTrajectory pde = run_pde(cfg);
  o.text("figure5_pde.csv", pde_timeseries_csv(pde));
  std::string fig5 = "K,replica,t,N,E,Omega,R\n";
  std::string fig5m = "K,t,N_mean,E_mean,Omega_mean,R_mean,N_var,E_var,Omega_var,R_var\n";
  std::string fig6 = "K,t,bin_left,bin_right,mass\n";
  std::string fig6p = "t,x,u_renormalized\n";
  std::int64_t violations = 0;
  for (auto k : ks) {
    SimConfig sc = cfg.sim_config();
    sc.k = k;
    const auto trajs = run_ensemble(sc, replicas, threads);
    for (const auto& t : trajs) violations += biomass_audit(t, sc.model);
    for (const auto& t : trajs)
      for (std::size_t i = 0; i < t.times.size(); ++i)
        fig5 += std::to_string(k) + "," + std::to_string(t.replica) + "," + format_real(t.times[i]) + "," +
                format_real(t.n[i]) + "," + format_real(t.e[i]) + "," + format_real(t.omega[i]) + "," +
                format_real(t.r[i]) + "\n";
    const auto s = summarize_ensemble(trajs);
    for (std::size_t i = 0; i < s.times.size(); ++i)
      fig5m += std::to_string(k) + "," + format_real(s.times[i]) + "," + format_real(s.n.mean[i]) + "," +
               format_real(s.e.mean[i]) + "," + format_real(s.omega.mean[i]) + "," + format_real(s.r.mean[i]) + "," +
               format_real(s.n.variance[i]) + "," + format_real(s.e.variance[i]) + "," +
               format_real(s.omega.variance[i]) + "," + format_real(s.r.variance[i]) + "\n";
    for (const auto& [t, h] : s.snapshots) {
      const auto m = renormalized(h);
      for (std::size_t i = 0; i < h.bins(); ++i)
        fig6 += std::to_string(k) + "," + format_real(t) + "," + format_real(h.edges[i]) + "," +
                format_real(h.edges[i + 1]) + "," + format_real(m.empty() ? 0.0 : m[i]) + "\n";
    }
  }
  const auto edges = cfg.histogram.edges();
  for (double t : cfg.snapshots) {
    std::size_t best = 0;
    for (std::size_t i = 0; i < pde.times.size(); ++i)
      if (std::abs(pde.times[i] - t) < std::abs(pde.times[best] - t)) best = i;
    const auto& u = pde.densities[best];
    const double window_mass = bin_density(pde.grid, u, edges).total();
    for (std::size_t j = 0; j < u.size(); ++j) {
      const double x = pde.grid.x(j);
      if (x < edges.front() || x > edges.back()) continue;
      fig6p += format_real(t) + "," + format_real(x) + "," + format_real(window_mass > 0.0 ? u[j] / window_mass : 0.0) +
               "\n";
    }
  }
  o.text("figure5_ibm.csv", fig5);
  o.text("figure5_mean.csv", fig5m);
  o.text("figure6_histograms.csv", fig6);
  o.text("figure6_pde.csv", fig6p);
  o.manifest(hash, cfg.seed, argv);
  std::cerr << "figures: biomass violations " << violations << ", output " << o.dir().string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"Energy-structured growth-fragmentation toolkit"};
  app.require_subcommand(1);
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());

  std::string config, out, ibm_dir, pde_dir, window = "0:50";
  std::size_t replicas = 100, threads = hw;
  std::uint64_t seed_value = 0;
  std::vector<std::int64_t> ks{100, 1000, 10000};

  auto* validate = app.add_subcommand("validate", "Check the admissibility conditions for a config");
  validate->add_option("config", config, "Config file")->required();

  auto* run_ibm = app.add_subcommand("run-ibm", "Run an IBM ensemble");
  run_ibm->add_option("config", config, "Config file")->required();
  run_ibm->add_option("--replicas", replicas, "Number of replicas")->check(CLI::PositiveNumber);
  run_ibm->add_option("--out", out, "Output directory");
  run_ibm->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  auto* ibm_seed = run_ibm->add_option("--seed", seed_value, "Override the config seed");

  auto* run_pde_cmd = app.add_subcommand("run-pde", "Solve the limiting PDE system");
  run_pde_cmd->add_option("config", config, "Config file")->required();
  run_pde_cmd->add_option("--out", out, "Output directory");

  auto* compare = app.add_subcommand("compare", "Compare an IBM ensemble to a PDE solve");
  compare->add_option("ibm_dir", ibm_dir, "run-ibm output directory")->required();
  compare->add_option("pde_dir", pde_dir, "run-pde output directory")->required();
  compare->add_option("--window", window, "Time window t0:t1");
  compare->add_option("--out", out, "Output directory");

  auto* figures = app.add_subcommand("figures", "Emit plot-ready CSVs for the figure scripts");
  figures->add_option("config", config, "Config file")->required();
  figures->add_option("--out", out, "Output directory");
  figures->add_option("--replicas", replicas, "Replicas per K")->check(CLI::PositiveNumber);
  figures->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  figures->add_option("--k", ks, "Population scales")->delimiter(',');
  auto* fig_seed = figures->add_option("--seed", seed_value, "Override the config seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kParse;
  }

  try {
    if (*validate) return cmd_validate(config);
    if (*run_ibm)
      return cmd_run_ibm(config, replicas, out, threads,
                         *ibm_seed ? std::optional<std::uint64_t>(seed_value) : std::nullopt, args);
    if (*run_pde_cmd) return cmd_run_pde(config, out, args);
    if (*compare) return cmd_compare(ibm_dir, pde_dir, window, out, args);
    if (*figures)
      return cmd_figures(config, out, replicas, threads, ks,
                         *fig_seed ? std::optional<std::uint64_t>(seed_value) : std::nullopt, args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParse;
  } catch (const CflViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDiverged;
  } catch (const PdeDivergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDiverged;
  } catch (const PopulationOverflow& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDiverged;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }
  return kOk;
}
