#include "egf/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace egf {

namespace fs = std::filesystem;

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string time_tag(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

fs::path write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
  return path;
}

std::string timeseries_csv(const std::vector<Trajectory>& trajs) {
  std::string s = "replica,t,N,E,Omega,R\n";
  for (const auto& tr : trajs) {
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      s += std::to_string(tr.replica);
      for (double v : {tr.times[i], tr.n[i], tr.e[i], tr.omega[i], tr.r[i]}) s += "," + format_real(v);
      s += "\n";
    }
  }
  return s;
}

std::string histogram_csv(const Histogram& h) {
  std::string s = "bin_left,bin_right,mass\n";
  for (std::size_t i = 0; i < h.bins(); ++i)
    s += format_real(h.edges[i]) + "," + format_real(h.edges[i + 1]) + "," + format_real(h.mass[i]) + "\n";
  return s;
}

nlohmann::ordered_json events_json(const std::vector<Trajectory>& trajs) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  EventCounts total;
  for (const auto& tr : trajs) {
    const auto& e = tr.events;
    nlohmann::ordered_json j = {{"replica", tr.replica},     {"births", e.births},
                                {"deaths", e.deaths},        {"b_clamps", e.b_clamps},
                                {"d_clamps", e.d_clamps},    {"vanished", e.vanished},
                                {"phantoms", e.phantoms},    {"bound_violations", e.bound_violations},
                                {"truncated", e.truncated}};
    if (e.truncated) {
      j["truncation_reason"] = e.truncation_reason;
      if (e.truncation_time) j["truncation_time"] = *e.truncation_time;
    }
    arr.push_back(j);
    total += e;
  }
  return {{"replicas", arr},
          {"total",
           {{"births", total.births},
            {"deaths", total.deaths},
            {"b_clamps", total.b_clamps},
            {"d_clamps", total.d_clamps},
            {"vanished", total.vanished},
            {"phantoms", total.phantoms},
            {"bound_violations", total.bound_violations}}}};
}

std::string pde_timeseries_csv(const DensityTrajectory& traj) {
  std::string s = "t,Nstar,Estar,Omegastar,Rstar\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    s += format_real(traj.times[i]);
    for (double v : {traj.nstar[i], traj.estar[i], traj.omegastar[i], traj.rstar[i]}) s += "," + format_real(v);
    s += "\n";
  }
  return s;
}

std::string pde_density_csv(const Grid& grid, const std::vector<double>& u) {
  std::string s = "x,u\n";
  for (std::size_t j = 0; j < u.size(); ++j) s += format_real(grid.x(j)) + "," + format_real(u[j]) + "\n";
  return s;
}

nlohmann::ordered_json pde_meta_json(const DensityTrajectory& traj) {
  return {{"grid",
           {{"dx", traj.grid.dx}, {"m", traj.grid.m}, {"nodes", traj.grid.nodes}, {"x_max", traj.grid.x_max()}}},
          {"dt", traj.dt},
          {"steps", traj.steps},
          {"clipped_mass", traj.clipped_mass},
          {"clip_events", traj.clip_events},
          {"outflow_left", traj.outflow_left},
          {"outflow_right", traj.outflow_right}};
}

std::string ensemble_summary_csv(const EnsembleSummary& s) {
  std::string out = "t";
  for (const char* name : {"N", "E", "Omega", "R"})
    for (const char* stat : {"mean", "var", "min", "max"}) out += std::string(",") + name + "_" + stat;
  out += "\n";
  const SeriesStats* series[] = {&s.n, &s.e, &s.omega, &s.r};
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    out += format_real(s.times[i]);
    for (const auto* st : series)
      for (double v : {st->mean[i], st->variance[i], st->min[i], st->max[i]}) out += "," + format_real(v);
    out += "\n";
  }
  return out;
}

namespace {

nlohmann::ordered_json real_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

nlohmann::ordered_json comparison_json(const ComparisonReport& r) {
  nlohmann::ordered_json errors = nlohmann::ordered_json::object();
  for (const auto& [name, e] : r.errors)
    errors[name] = {{"sup_rel_error", real_or_null(e.sup_rel)},
                    {"sup_abs_error", e.sup_abs},
                    {"sup_reference", e.sup_ref},
                    {"worst_time", e.worst_time}};
  nlohmann::ordered_json snaps = nlohmann::ordered_json::array();
  for (const auto& [t, d] : r.snapshots)
    snaps.push_back(
        {{"t", t}, {"l1", real_or_null(d.l1)}, {"ibm_outside_window", d.ibm_outside}, {"pde_outside_window", d.pde_outside}});
  nlohmann::ordered_json j = {{"window", {r.t0, r.t1}},
                              {"K", r.k},
                              {"replicas", r.replicas},
                              {"sup_relative_error", errors},
                              {"snapshot_l1", snaps}};
  j["qv_slope"] = r.qv_slope ? nlohmann::ordered_json(*r.qv_slope) : nlohmann::ordered_json(nullptr);
  j["biomass_violations"] = r.biomass_violations;
  return j;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

double parse_real(const std::string& s, const fs::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("malformed number '" + s + "' in " + path.string());
  }
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::string& header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header)
    throw IoError(path.string() + ": expected header '" + header + "'");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(split(line));
  }
  return rows;
}

}  // namespace

std::vector<Trajectory> read_timeseries_csv(const fs::path& path) {
  std::map<std::size_t, Trajectory> by_replica;
  for (const auto& row : read_csv(path, "replica,t,N,E,Omega,R")) {
    if (row.size() != 6) throw IoError(path.string() + ": expected 6 columns");
    const auto rep = static_cast<std::size_t>(parse_real(row[0], path));
    auto& tr = by_replica[rep];
    tr.replica = rep;
    tr.times.push_back(parse_real(row[1], path));
    tr.n.push_back(parse_real(row[2], path));
    tr.e.push_back(parse_real(row[3], path));
    tr.omega.push_back(parse_real(row[4], path));
    tr.r.push_back(parse_real(row[5], path));
  }
  std::vector<Trajectory> out;
  for (auto& [r, tr] : by_replica) out.push_back(std::move(tr));
  return out;
}

Histogram read_histogram_csv(const fs::path& path) {
  Histogram h;
  for (const auto& row : read_csv(path, "bin_left,bin_right,mass")) {
    if (row.size() != 3) throw IoError(path.string() + ": expected 3 columns");
    if (h.edges.empty()) h.edges.push_back(parse_real(row[0], path));
    h.edges.push_back(parse_real(row[1], path));
    h.mass.push_back(parse_real(row[2], path));
  }
  if (h.mass.empty()) throw IoError(path.string() + ": no bins");
  return h;
}

DensityTrajectory read_pde_outputs(const fs::path& dir) {
  DensityTrajectory traj;
  for (const auto& row : read_csv(dir / "pde_timeseries.csv", "t,Nstar,Estar,Omegastar,Rstar")) {
    if (row.size() != 5) throw IoError("pde_timeseries.csv: expected 5 columns");
    traj.times.push_back(parse_real(row[0], dir));
    traj.nstar.push_back(parse_real(row[1], dir));
    traj.estar.push_back(parse_real(row[2], dir));
    traj.omegastar.push_back(parse_real(row[3], dir));
    traj.rstar.push_back(parse_real(row[4], dir));
  }
  std::ifstream meta_in(dir / "pde_meta.json");
  if (!meta_in) throw IoError("cannot open " + (dir / "pde_meta.json").string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_in);
    traj.grid.dx = meta.at("grid").at("dx").get<double>();
    traj.grid.m = meta.at("grid").at("m").get<std::size_t>();
    traj.grid.nodes = meta.at("grid").at("nodes").get<std::size_t>();
    traj.dt = meta.at("dt").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("pde_meta.json: ") + e.what());
  }
  // Densities exist only at the snapshot times that were written; other
  // recorded times carry an empty density.
  traj.densities.assign(traj.times.size(), {});
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const fs::path p = dir / ("pde_density_" + time_tag(traj.times[i]) + ".csv");
    if (!fs::exists(p)) continue;
    std::vector<double> u;
    for (const auto& row : read_csv(p, "x,u")) u.push_back(parse_real(row.at(1), p));
    traj.densities[i] = std::move(u);
  }
  return traj;
}

}  // namespace egf
