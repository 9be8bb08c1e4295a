#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "egf/ibm.hpp"
#include "egf/model.hpp"

namespace egf {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PdeConfig {
  std::size_t nodes_per_x0 = 100;
  double x_max_grid = 6.0;
  double dt = 0.0;  // 0: CFL safety 0.5
  double record_dt = 0.1;
  double mass_limit = 1e9;
};

// Everything a run needs. Keys use the model's parameter names:
//
//   [model]       alpha beta gamma delta C_alpha C_beta C_gamma C_delta
//                 kappa D R_in R_max chi x0
//   [simulation]  K T R0 x_min x_max seed cap_b cap_d flow_substep record_dt
//                 snapshots vanish_policy energy_floor bound_safety
//                 max_population freeze_resource
//   [weight]      kappa1 kappa2
//   [histogram]   lo hi bins
//   [pde]         nodes_per_x0 x_max_grid dt record_dt mass_limit
struct RunConfig {
  AllometricParams model;
  std::int64_t k = 100;
  double t_end = 200.0;
  double r0 = 1.0;
  double x_min = 1.0;
  double x_max = 5.0;
  std::uint64_t seed = 1;
  double cap_b = 0.1;
  double cap_d = 2e4;
  double flow_substep = 1e-2;
  double record_dt = 0.1;
  std::vector<double> snapshots{0.0, 20.0, 200.0};
  VanishPolicy vanish_policy = VanishPolicy::absorb;
  double energy_floor = 1e-12;
  double bound_safety = 2.0;
  std::size_t max_population = 10'000'000;
  bool freeze_resource = false;
  double kappa1 = 0.25;
  double kappa2 = 0.625;
  HistogramSpec histogram;
  PdeConfig pde;

  SimConfig sim_config() const;
  ModelParams model_params() const { return ModelParams(model); }
  WeightFunction weight() const { return WeightFunction(kappa1, kappa2); }
};

// INI-style text (sections, key = value, '#' or ';' comments). Unknown
// sections or keys, malformed numbers and duplicate keys throw ConfigError.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_json(const std::string& text);
// Dispatches on the first non-blank character ('{' means JSON).
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

std::string serialize_config(const RunConfig& cfg);
std::string config_to_json(const RunConfig& cfg);

// FNV-1a of the serialized config, 16 hex digits.
std::string config_hash(const RunConfig& cfg);

}  // namespace egf
