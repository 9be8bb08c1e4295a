#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "egf/model.hpp"

namespace egf {

// Point measure of alive individuals plus the shared resource. Individuals
// live in a flat array (swap-remove on death); external ids stay stable
// through an id -> slot table.
class PopulationState {
 public:
  static constexpr std::int64_t kDead = -1;

  PopulationState() = default;
  PopulationState(std::vector<double> energies, double resource, std::int64_t scale_k);

  std::size_t size() const { return energies_.size(); }
  bool empty() const { return energies_.empty(); }
  std::span<const double> energies() const { return energies_; }
  std::span<double> energies_mut() { return energies_; }
  std::span<const std::uint64_t> ids() const { return ids_; }

  bool alive(std::uint64_t id) const;
  std::size_t slot(std::uint64_t id) const;  // throws std::logic_error if dead
  double energy(std::uint64_t id) const { return energies_[slot(id)]; }

  std::uint64_t add(double energy);
  void remove_slot(std::size_t slot);
  void remove(std::uint64_t id) { remove_slot(slot(id)); }
  void clear();

  double resource = 0.0;
  std::int64_t scale_k = 1;
  double time = 0.0;

  // Renormalized observables, each individual weighing 1/K.
  double n() const { return static_cast<double>(size()) / static_cast<double>(scale_k); }
  double total_energy() const;
  double omega(const WeightFunction& w) const;

 private:
  std::vector<double> energies_;
  std::vector<std::uint64_t> ids_;
  std::vector<std::int64_t> slot_of_;
};

struct FlowLimits {
  double floor = 1e-12;
  double ceiling = std::numeric_limits<double>::infinity();
  // Holds R fixed (used by oracle tests where the resource equation is disabled).
  bool freeze_resource = false;
};

enum class Direction { vanish, explode };

class VanishOrExplode : public std::runtime_error {
 public:
  VanishOrExplode(std::uint64_t id, Direction direction, double time);
  std::uint64_t id;
  Direction direction;
  double time;
};

// D (r_in - R) - chi phi(R) (sum_i psi(x_i)) / K.
double resource_derivative(const ModelParams& p, const PopulationState& state);

// Scratch buffers for the RK4 stages so repeated steps do not allocate.
struct FlowWorkspace {
  std::vector<double> k1, k2, k3, k4, tmp;
};

// Evaluates dx_i/dt into dx and returns sum_i psi(x_i). Non-positive energies
// contribute nothing and do not move.
double energy_field(const ModelParams& p, std::span<const double> x, double r, std::span<double> dx);

// dR/dt given the precomputed sum of psi over individuals.
inline double resource_field(const ModelParams& p, double r, double sum_psi, double k_scale) {
  return p.renewal(r) - p.rates().chi * p.phi(r) * sum_psi / k_scale;
}

// One classical RK4 step of the coupled system; r_out is projected into
// [0, r_max]. x and x_out may alias.
void rk4_step(const ModelParams& p, std::span<const double> x, double r, double k_scale, double h,
              bool freeze_resource, std::span<double> x_out, double& r_out, FlowWorkspace& ws);

// Advances energies and resource over dt with equal substeps no larger than
// `substep`. Throws VanishOrExplode when an energy leaves (floor, ceiling).
PopulationState integrate_flow(const ModelParams& p, PopulationState state, double dt, double substep,
                               const FlowLimits& limits = {});

// In-place variant reusing a workspace.
void integrate_flow_inplace(const ModelParams& p, PopulationState& state, double dt, double substep,
                            const FlowLimits& limits, FlowWorkspace& ws);

}  // namespace egf
