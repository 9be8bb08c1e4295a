#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "egf/flow.hpp"
#include "egf/histogram.hpp"
#include "egf/model.hpp"
#include "egf/rng.hpp"
#include "egf/timegrid.hpp"

namespace egf {

// u0(x) = C ((x - x_min)(x_max - x) / (x_max - x_min)^2)^5 on [x_min, x_max].
class InitialDensity {
 public:
  static constexpr std::size_t kTablePoints = 10000;

  InitialDensity(double x_min, double x_max);

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  // Normalization constant C, computed by composite Simpson quadrature.
  double normalization() const { return c_; }
  double operator()(double x) const;
  // Inverse-CDF draw from the tabulated CDF.
  double sample(Rng& rng) const;

 private:
  double shape(double x) const;

  double x_min_;
  double x_max_;
  double c_ = 1.0;
  std::vector<double> cdf_;  // on kTablePoints uniform nodes
};

struct InitialCondition {
  enum class Mode { density_u0, explicit_list };
  Mode mode = Mode::density_u0;
  double x_min = 1.0;
  double x_max = 5.0;
  std::vector<double> energies;
  double r0 = 1.0;
};

enum class VanishPolicy {
  // Individual reaching the energy floor is removed (counted as vanished).
  absorb,
  // The whole population is set to zero and the trajectory flagged truncated.
  annihilate,
};

struct SimConfig {
  ModelParams model;
  std::int64_t k = 100;
  double t_end = 200.0;
  double cap_b = 0.1;
  double cap_d = 2e4;
  double flow_substep = 1e-2;
  double record_dt = 0.1;
  std::vector<double> snapshot_times;
  std::uint64_t seed = 1;
  InitialCondition initial;
  WeightFunction weight{0.25, 0.625};
  HistogramSpec histogram;
  std::size_t max_population = 10'000'000;
  VanishPolicy vanish_policy = VanishPolicy::absorb;
  double energy_floor = 1e-12;
  // Dominating rate = min(cap, safety * larger endpoint rate over a substep).
  double bound_safety = 2.0;
  bool freeze_resource = false;

  void check() const;
  // 10 * max_energy_bound(max initial energy, t_end), or +inf when alpha is
  // outside (0, 1).
  double energy_ceiling() const;
};

struct EventCounts {
  std::uint64_t births = 0;
  std::uint64_t deaths = 0;
  std::uint64_t b_clamps = 0;
  std::uint64_t d_clamps = 0;
  std::uint64_t vanished = 0;
  std::uint64_t phantoms = 0;
  std::uint64_t bound_violations = 0;
  bool truncated = false;
  std::string truncation_reason;
  std::optional<double> truncation_time;

  EventCounts& operator+=(const EventCounts& o);
};

struct Trajectory {
  std::size_t replica = 0;
  std::int64_t k = 1;
  std::vector<double> times;
  std::vector<double> n;
  std::vector<double> e;
  std::vector<double> omega;
  std::vector<double> r;
  EventCounts events;
  std::map<double, Histogram> snapshots;
};

class PopulationOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

PopulationState sample_initial(const SimConfig& cfg, Rng& rng);

enum class EventKind { none, birth, death };

struct NextEvent {
  double event_time = 0.0;
  EventKind kind = EventKind::none;
  std::uint64_t individual_id = 0;
};

// One step of the global-cap thinning construction: draws the next proposal
// time at rate N (cap_b + cap_d), moves the state along the flow to it and
// decides acceptance against the post-flow energy. The returned event is not
// applied. Empty population or a proposal beyond t_end moves the state to
// t_end and returns kind none.
NextEvent next_event(const SimConfig& cfg, PopulationState& state, Rng& rng, EventCounts& counts,
                     FlowWorkspace& ws);

// Parent keeps x - x0, child gets x0. Returns the child's id.
std::uint64_t apply_birth(PopulationState& state, std::uint64_t id, double x0);
void apply_death(PopulationState& state, std::uint64_t id);

struct SimulationResult {
  Trajectory trajectory;
  PopulationState final_state;
};

// Full run of the renormalized process for one replica (seed mixed with the
// replica index).
SimulationResult simulate_full(const SimConfig& cfg, std::size_t replica = 0);
Trajectory simulate(const SimConfig& cfg, std::size_t replica = 0);

// Independent replicas 0..replicas-1 on up to `threads` worker threads;
// results are ordered by replica index whatever the scheduling.
std::vector<Trajectory> run_ensemble(const SimConfig& cfg, std::size_t replicas, std::size_t threads);

}  // namespace egf
