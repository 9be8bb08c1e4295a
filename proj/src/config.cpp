#include "egf/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "json.hpp"

namespace egf {

SimConfig RunConfig::sim_config() const {
  SimConfig c;
  c.model = ModelParams(model);
  c.k = k;
  c.t_end = t_end;
  c.cap_b = cap_b;
  c.cap_d = cap_d;
  c.flow_substep = flow_substep;
  c.record_dt = record_dt;
  c.snapshot_times = snapshots;
  c.seed = seed;
  c.initial.mode = InitialCondition::Mode::density_u0;
  c.initial.x_min = x_min;
  c.initial.x_max = x_max;
  c.initial.r0 = r0;
  c.weight = weight();
  c.histogram = histogram;
  c.max_population = max_population;
  c.vanish_policy = vanish_policy;
  c.energy_floor = energy_floor;
  c.bound_safety = bound_safety;
  c.freeze_resource = freeze_resource;
  return c;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double to_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto s = trim(v);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  return out;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& v) {
  Int out = 0;
  const auto s = trim(v);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
    // Accept integral values written in floating notation (1e4).
    const double d = to_real(key, s);
    if (d != static_cast<double>(static_cast<Int>(d)))
      throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
    return static_cast<Int>(d);
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  const auto s = trim(v);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("config: '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(to_real(key, item));
  }
  return out;
}

struct Key {
  const char* section;
  const char* name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define EGF_REAL(sec, name, field)                                                       \
  Key {                                                                                  \
    sec, name, [](RunConfig& c, const std::string& v) { c.field = to_real(name, v); }, \
        [](const RunConfig& c) { return fmt(c.field); }                                  \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      EGF_REAL("model", "alpha", model.alpha),
      EGF_REAL("model", "beta", model.beta),
      EGF_REAL("model", "gamma", model.gamma),
      EGF_REAL("model", "delta", model.delta),
      EGF_REAL("model", "C_alpha", model.c_alpha),
      EGF_REAL("model", "C_beta", model.c_beta),
      EGF_REAL("model", "C_gamma", model.c_gamma),
      EGF_REAL("model", "C_delta", model.c_delta),
      EGF_REAL("model", "kappa", model.kappa),
      EGF_REAL("model", "D", model.d_dilution),
      EGF_REAL("model", "R_in", model.r_in),
      EGF_REAL("model", "R_max", model.r_max),
      EGF_REAL("model", "chi", model.chi),
      EGF_REAL("model", "x0", model.x0),
      Key{"simulation", "K", [](RunConfig& c, const std::string& v) { c.k = to_int<std::int64_t>("K", v); },
          [](const RunConfig& c) { return std::to_string(c.k); }},
      EGF_REAL("simulation", "T", t_end),
      EGF_REAL("simulation", "R0", r0),
      EGF_REAL("simulation", "x_min", x_min),
      EGF_REAL("simulation", "x_max", x_max),
      Key{"simulation", "seed", [](RunConfig& c, const std::string& v) { c.seed = to_int<std::uint64_t>("seed", v); },
          [](const RunConfig& c) { return std::to_string(c.seed); }},
      EGF_REAL("simulation", "cap_b", cap_b),
      EGF_REAL("simulation", "cap_d", cap_d),
      EGF_REAL("simulation", "flow_substep", flow_substep),
      EGF_REAL("simulation", "record_dt", record_dt),
      Key{"simulation", "snapshots", [](RunConfig& c, const std::string& v) { c.snapshots = to_list("snapshots", v); },
          [](const RunConfig& c) {
            std::string s;
            for (std::size_t i = 0; i < c.snapshots.size(); ++i) s += (i ? ", " : "") + fmt(c.snapshots[i]);
            return s;
          }},
      Key{"simulation", "vanish_policy",
          [](RunConfig& c, const std::string& v) {
            const auto s = trim(v);
            if (s == "absorb")
              c.vanish_policy = VanishPolicy::absorb;
            else if (s == "annihilate")
              c.vanish_policy = VanishPolicy::annihilate;
            else
              throw ConfigError("config: vanish_policy must be absorb or annihilate, got '" + v + "'");
          },
          [](const RunConfig& c) {
            return std::string(c.vanish_policy == VanishPolicy::absorb ? "absorb" : "annihilate");
          }},
      EGF_REAL("simulation", "energy_floor", energy_floor),
      EGF_REAL("simulation", "bound_safety", bound_safety),
      Key{"simulation", "max_population",
          [](RunConfig& c, const std::string& v) { c.max_population = to_int<std::size_t>("max_population", v); },
          [](const RunConfig& c) { return std::to_string(c.max_population); }},
      Key{"simulation", "freeze_resource",
          [](RunConfig& c, const std::string& v) { c.freeze_resource = to_bool("freeze_resource", v); },
          [](const RunConfig& c) { return std::string(c.freeze_resource ? "true" : "false"); }},
      EGF_REAL("weight", "kappa1", kappa1),
      EGF_REAL("weight", "kappa2", kappa2),
      EGF_REAL("histogram", "lo", histogram.lo),
      EGF_REAL("histogram", "hi", histogram.hi),
      Key{"histogram", "bins", [](RunConfig& c, const std::string& v) { c.histogram.bins = to_int<std::size_t>("bins", v); },
          [](const RunConfig& c) { return std::to_string(c.histogram.bins); }},
      Key{"pde", "nodes_per_x0",
          [](RunConfig& c, const std::string& v) { c.pde.nodes_per_x0 = to_int<std::size_t>("nodes_per_x0", v); },
          [](const RunConfig& c) { return std::to_string(c.pde.nodes_per_x0); }},
      EGF_REAL("pde", "x_max_grid", pde.x_max_grid),
      EGF_REAL("pde", "dt", pde.dt),
      EGF_REAL("pde", "record_dt", pde.record_dt),
      EGF_REAL("pde", "mass_limit", pde.mass_limit),
  };
  return table;
}

#undef EGF_REAL

const Key* find_key(const std::string& section, const std::string& name) {
  for (const auto& k : keys())
    if (section == k.section && name == k.name) return &k;
  return nullptr;
}

bool known_section(const std::string& s) {
  for (const auto& k : keys())
    if (s == k.section) return true;
  return false;
}

void finish(const RunConfig& c) {
  try {
    c.model.check();
    c.sim_config().check();
    WeightFunction w(c.kappa1, c.kappa2);
    (void)w;
    c.histogram.edges();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  if (c.pde.nodes_per_x0 < 2) throw ConfigError("config: nodes_per_x0 must be at least 2");
  if (!(c.pde.x_max_grid > c.model.x0)) throw ConfigError("config: x_max_grid must exceed x0");
  if (c.pde.dt < 0.0 || !(c.pde.record_dt > 0.0)) throw ConfigError("config: pde dt must be >= 0, record_dt > 0");
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::string section;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto cut = line.find_first_of("#;");
    if (cut != std::string::npos) line.erase(cut);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!known_section(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string name = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError(where + "key '" + name + "' outside any section");
    const Key* k = find_key(section, name);
    if (!k) throw ConfigError(where + "unknown key '" + name + "' in [" + section + "]");
    if (!seen.insert(section + "." + name).second) throw ConfigError(where + "duplicate key '" + name + "'");
    k->set(cfg, value);
  }
  finish(cfg);
  return cfg;
}

RunConfig parse_config_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: JSON root must be an object");
  RunConfig cfg;
  for (const auto& [section, body] : j.items()) {
    if (!known_section(section)) throw ConfigError("config: unknown section '" + section + "'");
    if (!body.is_object()) throw ConfigError("config: section '" + section + "' must be an object");
    for (const auto& [name, v] : body.items()) {
      const Key* k = find_key(section, name);
      if (!k) throw ConfigError("config: unknown key '" + name + "' in '" + section + "'");
      std::string s;
      if (v.is_number_integer()) {
        s = v.is_number_unsigned() ? std::to_string(v.get<std::uint64_t>()) : std::to_string(v.get<std::int64_t>());
      } else if (v.is_number()) {
        s = fmt(v.get<double>());
      } else if (v.is_boolean()) {
        s = v.get<bool>() ? "true" : "false";
      } else if (v.is_string()) {
        s = v.get<std::string>();
      } else if (v.is_array()) {
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (!v[i].is_number()) throw ConfigError("config: '" + name + "' must be a list of numbers");
          s += (i ? "," : "") + fmt(v[i].get<double>());
        }
      } else {
        throw ConfigError("config: unsupported value for '" + name + "'");
      }
      k->set(cfg, s);
    }
  }
  finish(cfg);
  return cfg;
}

RunConfig parse_config(const std::string& text) {
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    return c == '{' ? parse_config_json(text) : parse_config_text(text);
  }
  return parse_config_text(text);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& k : keys()) {
    if (section != k.section) {
      if (!section.empty()) out += "\n";
      section = k.section;
      out += "[" + section + "]\n";
    }
    out += std::string(k.name) + " = " + k.get(cfg) + "\n";
  }
  return out;
}

std::string config_to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  const auto m = cfg.model;
  j["model"] = {{"alpha", m.alpha},     {"beta", m.beta},       {"gamma", m.gamma},     {"delta", m.delta},
                {"C_alpha", m.c_alpha}, {"C_beta", m.c_beta},   {"C_gamma", m.c_gamma}, {"C_delta", m.c_delta},
                {"kappa", m.kappa},     {"D", m.d_dilution},    {"R_in", m.r_in},       {"R_max", m.r_max},
                {"chi", m.chi},         {"x0", m.x0}};
  j["simulation"] = {{"K", cfg.k},
                     {"T", cfg.t_end},
                     {"R0", cfg.r0},
                     {"x_min", cfg.x_min},
                     {"x_max", cfg.x_max},
                     {"seed", cfg.seed},
                     {"cap_b", cfg.cap_b},
                     {"cap_d", cfg.cap_d},
                     {"flow_substep", cfg.flow_substep},
                     {"record_dt", cfg.record_dt},
                     {"snapshots", cfg.snapshots},
                     {"vanish_policy", cfg.vanish_policy == VanishPolicy::absorb ? "absorb" : "annihilate"},
                     {"energy_floor", cfg.energy_floor},
                     {"bound_safety", cfg.bound_safety},
                     {"max_population", cfg.max_population},
                     {"freeze_resource", cfg.freeze_resource}};
  j["weight"] = {{"kappa1", cfg.kappa1}, {"kappa2", cfg.kappa2}};
  j["histogram"] = {{"lo", cfg.histogram.lo}, {"hi", cfg.histogram.hi}, {"bins", cfg.histogram.bins}};
  j["pde"] = {{"nodes_per_x0", cfg.pde.nodes_per_x0},
              {"x_max_grid", cfg.pde.x_max_grid},
              {"dt", cfg.pde.dt},
              {"record_dt", cfg.pde.record_dt},
              {"mass_limit", cfg.pde.mass_limit}};
  return j.dump(2);
}

std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : serialize_config(cfg)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace egf
