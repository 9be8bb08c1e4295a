#include "egf/flow.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace egf {

PopulationState::PopulationState(std::vector<double> energies, double r, std::int64_t k)
    : resource(r), scale_k(k) {
  if (k <= 0) throw std::invalid_argument("PopulationState: K must be positive");
  energies_.reserve(energies.size());
  for (double x : energies) add(x);
}

bool PopulationState::alive(std::uint64_t id) const {
  return id < slot_of_.size() && slot_of_[id] != kDead;
}

std::size_t PopulationState::slot(std::uint64_t id) const {
  if (!alive(id)) throw std::logic_error("individual " + std::to_string(id) + " is not alive");
  return static_cast<std::size_t>(slot_of_[id]);
}

std::uint64_t PopulationState::add(double energy) {
  const std::uint64_t id = slot_of_.size();
  slot_of_.push_back(static_cast<std::int64_t>(energies_.size()));
  energies_.push_back(energy);
  ids_.push_back(id);
  return id;
}

void PopulationState::remove_slot(std::size_t s) {
  if (s >= energies_.size()) throw std::logic_error("remove_slot: slot out of range");
  const std::size_t last = energies_.size() - 1;
  slot_of_[ids_[s]] = kDead;
  if (s != last) {
    energies_[s] = energies_[last];
    ids_[s] = ids_[last];
    slot_of_[ids_[s]] = static_cast<std::int64_t>(s);
  }
  energies_.pop_back();
  ids_.pop_back();
}

void PopulationState::clear() {
  for (auto id : ids_) slot_of_[id] = kDead;
  energies_.clear();
  ids_.clear();
}

double PopulationState::total_energy() const {
  double s = 0.0;
  for (double x : energies_) s += x;
  return s / static_cast<double>(scale_k);
}

double PopulationState::omega(const WeightFunction& w) const {
  double s = 0.0;
  for (double x : energies_) s += w.eval(x);
  return s / static_cast<double>(scale_k);
}

VanishOrExplode::VanishOrExplode(std::uint64_t id_, Direction dir, double t)
    : std::runtime_error(std::string("individual ") + std::to_string(id_) +
                         (dir == Direction::vanish ? " vanished" : " exploded") + " at t = " + std::to_string(t)),
      id(id_),
      direction(dir),
      time(t) {}

double resource_derivative(const ModelParams& p, const PopulationState& state) {
  double sum_psi = 0.0;
  for (double x : state.energies()) sum_psi += p.psi(x);
  return resource_field(p, state.resource, sum_psi, static_cast<double>(state.scale_k));
}

double energy_field(const ModelParams& p, std::span<const double> x, double r, std::span<double> dx) {
  const auto& a = p.rates();
  const double phi = p.phi(std::clamp(r, 0.0, a.r_max));
  double sum_psi = 0.0;
  if (a.alpha == a.gamma) {
    // One power per individual: g = (phi C_gamma - C_alpha) x^alpha.
    const double net = phi * a.c_gamma - a.c_alpha;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!(x[i] > 0.0)) {
        dx[i] = 0.0;
        continue;
      }
      const double xa = power_law(1.0, x[i], a.alpha);
      dx[i] = net * xa;
      sum_psi += a.c_gamma * xa;
    }
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!(x[i] > 0.0)) {
        dx[i] = 0.0;
        continue;
      }
      const double psi = p.psi(x[i]);
      dx[i] = phi * psi - p.ell(x[i]);
      sum_psi += psi;
    }
  }
  return sum_psi;
}

void rk4_step(const ModelParams& p, std::span<const double> x, double r, double k_scale, double h,
              bool freeze_resource, std::span<double> x_out, double& r_out, FlowWorkspace& ws) {
  const std::size_t n = x.size();
  ws.k1.resize(n);
  ws.k2.resize(n);
  ws.k3.resize(n);
  ws.k4.resize(n);
  ws.tmp.resize(n);
  const double r_max = p.rates().r_max;
  auto rfield = [&](double rr, double s) {
    return freeze_resource ? 0.0 : resource_field(p, std::clamp(rr, 0.0, r_max), s, k_scale);
  };

  const double q1 = rfield(r, energy_field(p, x, r, ws.k1));
  for (std::size_t i = 0; i < n; ++i) ws.tmp[i] = x[i] + 0.5 * h * ws.k1[i];
  const double r2 = r + 0.5 * h * q1;
  const double q2 = rfield(r2, energy_field(p, ws.tmp, r2, ws.k2));
  for (std::size_t i = 0; i < n; ++i) ws.tmp[i] = x[i] + 0.5 * h * ws.k2[i];
  const double r3 = r + 0.5 * h * q2;
  const double q3 = rfield(r3, energy_field(p, ws.tmp, r3, ws.k3));
  for (std::size_t i = 0; i < n; ++i) ws.tmp[i] = x[i] + h * ws.k3[i];
  const double r4 = r + h * q3;
  const double q4 = rfield(r4, energy_field(p, ws.tmp, r4, ws.k4));

  for (std::size_t i = 0; i < n; ++i)
    x_out[i] = x[i] + h / 6.0 * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
  r_out = std::clamp(r + h / 6.0 * (q1 + 2.0 * q2 + 2.0 * q3 + q4), 0.0, r_max);
}

void integrate_flow_inplace(const ModelParams& p, PopulationState& state, double dt, double substep,
                            const FlowLimits& limits, FlowWorkspace& ws) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_flow: dt must be positive");
  if (!(substep > 0.0)) throw std::invalid_argument("integrate_flow: substep must be positive");
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(dt / substep - 1e-9)));
  const double h = dt / static_cast<double>(steps);
  const double k_scale = static_cast<double>(state.scale_k);
  const double t0 = state.time;
  auto x = state.energies_mut();
  for (std::size_t s = 0; s < steps; ++s) {
    double r_next = state.resource;
    rk4_step(p, x, state.resource, k_scale, h, limits.freeze_resource, x, r_next, ws);
    state.resource = r_next;
    const double t = t0 + h * static_cast<double>(s + 1);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!(x[i] > limits.floor)) throw VanishOrExplode(state.ids()[i], Direction::vanish, t);
      if (!(x[i] < limits.ceiling)) throw VanishOrExplode(state.ids()[i], Direction::explode, t);
    }
  }
  state.time = t0 + dt;
}

PopulationState integrate_flow(const ModelParams& p, PopulationState state, double dt, double substep,
                               const FlowLimits& limits) {
  FlowWorkspace ws;
  integrate_flow_inplace(p, state, dt, substep, limits, ws);
  return state;
}

}  // namespace egf
