#include "egf/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "egf/ibm.hpp"
#include "egf/timegrid.hpp"

namespace egf {

Grid Grid::aligned(double x0, std::size_t per_x0, double x_max_grid) {
  if (!(x0 > 0.0) || per_x0 < 2) throw std::invalid_argument("Grid: need x0 > 0 and at least 2 nodes per x0");
  Grid g;
  g.m = per_x0;
  g.dx = x0 / static_cast<double>(per_x0);
  g.nodes = static_cast<std::size_t>(std::ceil(x_max_grid / g.dx - 1e-9));
  if (g.nodes < g.m + 1) throw std::invalid_argument("Grid: x_max must exceed x0");
  return g;
}

CflViolation::CflViolation(double dt_, double required)
    : std::runtime_error("CFL violated: dt = " + std::to_string(dt_) + " exceeds required dt <= " +
                         std::to_string(required)),
      dt(dt_),
      required_dt(required) {}

PdeOperator::PdeOperator(const ModelParams& p, const Grid& grid, PdeOptions options)
    : p_(p), grid_(grid), options_(options) {
  const std::size_t n = grid.nodes;
  b_.resize(n);
  d_.resize(n);
  psi_.resize(n);
  ell_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double x = grid.x(j);
    b_[j] = p.b(x);
    d_[j] = p.d(x);
    psi_[j] = p.psi(x);
    ell_[j] = p.ell(x);
  }
  flux_.resize(n + 1);
}

double PdeOperator::max_stable_dt(double r) const {
  const double phi = p_.phi(std::clamp(r, 0.0, p_.rates().r_max));
  double top = 0.0;
  for (std::size_t j = 0; j < grid_.nodes; ++j) top = std::max(top, std::abs(phi * psi_[j] - ell_[j]));
  return top > 0.0 ? grid_.dx / top : std::numeric_limits<double>::infinity();
}

double PdeOperator::max_stable_dt_any_r() const {
  // g is affine in phi, so the extremes sit at R = 0 and R = r_max.
  return std::min(max_stable_dt(0.0), max_stable_dt(p_.rates().r_max));
}

double PdeOperator::birth_flux(const std::vector<double>& u) const {
  double s = 0.0;
  for (std::size_t j = 0; j < grid_.nodes; ++j) s += b_[j] * u[j];
  return s * grid_.dx;
}

void PdeOperator::step(DensityField& field, double dt) const {
  const std::size_t n = grid_.nodes;
  const std::size_t m = grid_.m;
  const double dx = grid_.dx;
  auto& u = field.u;
  if (u.size() != n) throw std::invalid_argument("pde step: density size does not match grid");
  const double r = std::clamp(field.r, 0.0, p_.rates().r_max);
  const double phi = p_.phi(r);

  double gmax = 0.0;
  auto g = [&](std::size_t j) { return phi * psi_[j] - ell_[j]; };
  for (std::size_t j = 0; j < n; ++j) gmax = std::max(gmax, std::abs(g(j)));
  if (gmax > 0.0 && dt * gmax / dx > 1.0 + 1e-12) throw CflViolation(dt, dx / gmax);

  // Upwind face fluxes; face k sits between nodes k-1 and k.
  flux_[0] = std::min(g(0), 0.0) * u[0];
  for (std::size_t k = 1; k < n; ++k) flux_[k] = std::max(g(k - 1), 0.0) * u[k - 1] + std::min(g(k), 0.0) * u[k];
  flux_[n] = std::max(g(n - 1), 0.0) * u[n - 1];

  const double births = birth_flux(u);
  double sum_psi = 0.0;
  for (std::size_t j = 0; j < n; ++j) sum_psi += psi_[j] * u[j];
  sum_psi *= dx;

  std::vector<double> next(n);
  for (std::size_t j = 0; j < n; ++j) {
    double du = -(flux_[j + 1] - flux_[j]) / dx - (b_[j] + d_[j]) * u[j];
    if (j + m < n) du += b_[j + m] * u[j + m];
    if (j == grid_.x0_index()) du += births / dx;
    next[j] = u[j] + dt * du;
  }

  field.outflow_left += dt * (-flux_[0]);
  field.outflow_right += dt * flux_[n];

  double mass = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (next[j] < 0.0) {
      field.clipped_mass += -next[j] * dx;
      ++field.clip_events;
      next[j] = 0.0;
    } else if (next[j] < std::numeric_limits<double>::min()) {
      next[j] = 0.0;  // subnormals stall the arithmetic and carry no mass
    }
    mass += next[j];
  }
  mass *= dx;
  if (!std::isfinite(mass) || mass > options_.mass_limit)
    throw PdeDivergence("pde diverged at t = " + std::to_string(field.time + dt) + " (mass " + std::to_string(mass) +
                        ")");
  u.swap(next);

  if (!options_.freeze_resource) {
    const double dr = p_.renewal(r) - p_.rates().chi * phi * sum_psi;
    field.r = std::clamp(r + dt * dr, 0.0, p_.rates().r_max);
  }
  field.time += dt;
}

DensityField pde_step(const ModelParams& p, const Grid& grid, const DensityField& field, double dt,
                      PdeOptions options) {
  PdeOperator op(p, grid, options);
  DensityField out = field;
  op.step(out, dt);
  return out;
}

DensityField initial_field(const Grid& grid, double x_min, double x_max, double r0, double mass) {
  InitialDensity u0(x_min, x_max);
  DensityField f;
  f.u.resize(grid.nodes);
  double s = 0.0;
  for (std::size_t j = 0; j < grid.nodes; ++j) {
    f.u[j] = u0(grid.x(j));
    s += f.u[j];
  }
  s *= grid.dx;
  if (!(s > 0.0)) throw std::invalid_argument("initial field: support does not meet the grid");
  for (double& v : f.u) v *= mass / s;
  f.r = r0;
  return f;
}

double default_dt(const ModelParams& p, const Grid& grid) {
  double top = 0.0;
  for (std::size_t j = 0; j < grid.nodes; ++j) top = std::max(top, p.g_bar(grid.x(j)));
  return top > 0.0 ? 0.5 * grid.dx / top : 0.1;
}

namespace {

void record(DensityTrajectory& tr, const Grid& grid, const DensityField& f, const WeightFunction& w) {
  double n = 0.0, e = 0.0, o = 0.0;
  for (std::size_t j = 0; j < grid.nodes; ++j) {
    const double x = grid.x(j);
    n += f.u[j];
    e += x * f.u[j];
    o += w.eval(x) * f.u[j];
  }
  tr.times.push_back(f.time);
  tr.nstar.push_back(n * grid.dx);
  tr.estar.push_back(e * grid.dx);
  tr.omegastar.push_back(o * grid.dx);
  tr.rstar.push_back(f.r);
  tr.densities.push_back(f.u);
}

}  // namespace

DensityTrajectory solve(const ModelParams& p, const Grid& grid, const DensityField& initial, double t_end, double dt,
                        double record_dt, const WeightFunction& w, PdeOptions options) {
  if (!(t_end > 0.0) || !(dt > 0.0) || !(record_dt > 0.0))
    throw std::invalid_argument("pde solve: t_end, dt and record_dt must be positive");
  PdeOperator op(p, grid, options);
  DensityTrajectory tr;
  tr.grid = grid;
  DensityField f = initial;
  f.time = 0.0;
  record(tr, grid, f, w);

  const auto steps_per_record = static_cast<std::size_t>(std::ceil(record_dt / dt - 1e-9));
  tr.dt = record_dt / static_cast<double>(steps_per_record);
  const auto rec = record_times(t_end, record_dt);
  for (std::size_t k = 1; k < rec.size(); ++k) {
    const double span = rec[k] - rec[k - 1];
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(span / tr.dt - 1e-9)));
    const double h = span / static_cast<double>(steps);
    for (std::size_t s = 0; s < steps; ++s) op.step(f, h);
    f.time = rec[k];
    tr.steps += steps;
    record(tr, grid, f, w);
  }
  tr.clipped_mass = f.clipped_mass;
  tr.outflow_left = f.outflow_left;
  tr.outflow_right = f.outflow_right;
  tr.clip_events = f.clip_events;
  return tr;
}

std::vector<double> balance_residual(const DensityTrajectory& traj, const ModelParams& p) {
  const Grid& g = traj.grid;
  const double chi = p.rates().chi;
  auto bracket = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t j = 0; j < g.nodes; ++j) {
      const double x = g.x(j);
      s += (p.ell(x) + p.d(x) * x) * traj.densities[k][j];
    }
    return p.renewal(traj.rstar[k]) - chi * s * g.dx;
  };
  std::vector<double> out;
  if (traj.times.size() < 2) return out;
  double prev = bracket(0);
  for (std::size_t k = 0; k + 1 < traj.times.size(); ++k) {
    const double next = bracket(k + 1);
    const double h = traj.times[k + 1] - traj.times[k];
    const double lhs =
        (traj.rstar[k + 1] + chi * traj.estar[k + 1] - traj.rstar[k] - chi * traj.estar[k]) / h;
    out.push_back(std::abs(lhs - 0.5 * (prev + next)));
    prev = next;
  }
  return out;
}

std::vector<double> weak_form_residual(const DensityTrajectory& traj, const ModelParams& p, const TestFunction& phi) {
  const Grid& g = traj.grid;
  const double x0 = p.rates().x0;
  // Trapezoid on [0, x_J] with u(0) = 0: unit weights except half at x_J.
  auto weight = [&](std::size_t j) { return j + 1 == g.nodes ? 0.5 : 1.0; };
  auto pair = [&](std::size_t k) {
    const double t = traj.times[k];
    double s = 0.0;
    for (std::size_t j = 0; j < g.nodes; ++j) s += weight(j) * phi.value(t, g.x(j)) * traj.densities[k][j];
    return s * g.dx;
  };
  auto generator = [&](std::size_t k) {
    const double t = traj.times[k];
    const double r = traj.rstar[k];
    const double at_x0 = phi.value(t, x0);
    double s = 0.0;
    for (std::size_t j = 0; j < g.nodes; ++j) {
      const double u = traj.densities[k][j];
      if (u == 0.0) continue;
      const double x = g.x(j);
      const double v = phi.value(t, x);
      double lphi = phi.dt(t, x) + p.g(x, r) * phi.dx(t, x) - p.d(x) * v;
      const double b = p.b(x);
      if (b > 0.0) lphi += b * (at_x0 + phi.value(t, x - x0) - v);
      s += weight(j) * lphi * u;
    }
    return s * g.dx;
  };

  std::vector<double> out;
  if (traj.times.empty()) return out;
  const double base = pair(0);
  double integral = 0.0;
  double prev = generator(0);
  out.push_back(0.0);
  for (std::size_t k = 1; k < traj.times.size(); ++k) {
    const double next = generator(k);
    integral += 0.5 * (traj.times[k] - traj.times[k - 1]) * (prev + next);
    prev = next;
    out.push_back(std::abs(pair(k) - base - integral));
  }
  return out;
}

std::vector<double> jump_consistency(const DensityTrajectory& traj, const ModelParams& p, double eps) {
  const Grid& g = traj.grid;
  const std::size_t i0 = g.x0_index();
  if (i0 < 1 || i0 + 1 >= g.nodes) throw std::invalid_argument("jump consistency: x0 must be interior to the grid");
  const PdeOperator op(p, g);
  std::vector<double> out;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const auto& u = traj.densities[k];
    const double births = op.birth_flux(u);
    const double jump = (u[i0 + 1] - u[i0 - 1]) * p.g(p.rates().x0, traj.rstar[k]);
    out.push_back((jump - births) / (births + eps));
  }
  return out;
}

Histogram bin_density(const Grid& grid, const std::vector<double>& u, const std::vector<double>& edges) {
  if (edges.size() < 2) throw std::invalid_argument("bin_density: need at least one bin");
  Histogram h;
  h.edges = edges;
  h.mass.assign(edges.size() - 1, 0.0);
  const double lo_edge = edges.front();
  const double hi_edge = edges.back();
  for (std::size_t j = 0; j < grid.nodes && j < u.size(); ++j) {
    if (u[j] == 0.0) continue;
    const double a = grid.x(j) - 0.5 * grid.dx;
    const double b = grid.x(j) + 0.5 * grid.dx;
    const double density = u[j];
    if (a < lo_edge) h.below += density * (std::min(b, lo_edge) - a);
    if (b > hi_edge) h.above += density * (b - std::max(a, hi_edge));
    const double ca = std::max(a, lo_edge);
    const double cb = std::min(b, hi_edge);
    if (!(cb > ca)) continue;
    auto it = std::upper_bound(edges.begin(), edges.end(), ca);
    std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - edges.begin() - 1));
    for (; i + 1 < edges.size() && edges[i] < cb; ++i) {
      const double overlap = std::min(cb, edges[i + 1]) - std::max(ca, edges[i]);
      if (overlap > 0.0) h.mass[i] += density * overlap;
    }
  }
  return h;
}

}  // namespace egf
