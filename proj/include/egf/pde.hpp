#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "egf/histogram.hpp"
#include "egf/model.hpp"

namespace egf {

// Uniform energy grid x_j = j dx, j = 1..J (x = 0 excluded), aligned so that
// x0 = m dx lands exactly on a node.
struct Grid {
  double dx = 0.01;
  std::size_t m = 100;  // x0 / dx
  std::size_t nodes = 600;

  static Grid aligned(double x0, std::size_t per_x0, double x_max_grid);

  double x(std::size_t idx) const { return static_cast<double>(idx + 1) * dx; }
  std::size_t x0_index() const { return m - 1; }
  double x_max() const { return static_cast<double>(nodes) * dx; }
};

struct DensityField {
  std::vector<double> u;
  double r = 0.0;
  double time = 0.0;
  // Bookkeeping: mass removed by positivity clipping, and mass that left
  // through the left (x -> 0) and right (truncation) boundaries.
  double clipped_mass = 0.0;
  double outflow_left = 0.0;
  double outflow_right = 0.0;
  std::size_t clip_events = 0;
};

class CflViolation : public std::runtime_error {
 public:
  CflViolation(double dt, double required_dt);
  double dt;
  double required_dt;
};

class PdeDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PdeOptions {
  bool freeze_resource = false;
  double mass_limit = 1e9;
};

// Rates tabulated on a grid; the explicit upwind / Euler step.
class PdeOperator {
 public:
  PdeOperator(const ModelParams& p, const Grid& grid, PdeOptions options = {});

  const Grid& grid() const { return grid_; }
  const ModelParams& model() const { return p_; }

  // Largest stable dt (transport CFL number 1) at resource level r.
  double max_stable_dt(double r) const;
  // Largest dt that is stable for every r in [0, r_max].
  double max_stable_dt_any_r() const;

  void step(DensityField& field, double dt) const;

  // Birth flux, integral of b u dx.
  double birth_flux(const std::vector<double>& u) const;

  const std::vector<double>& b() const { return b_; }
  const std::vector<double>& d() const { return d_; }
  const std::vector<double>& psi() const { return psi_; }
  const std::vector<double>& ell() const { return ell_; }

 private:
  ModelParams p_;
  Grid grid_;
  PdeOptions options_;
  std::vector<double> b_, d_, psi_, ell_;
  mutable std::vector<double> flux_;
};

// One Euler step of transport + nonlocal birth + death with the newborn
// influx injected at the x0 node, and one Euler step of the resource.
// Throws CflViolation naming the required dt, PdeDivergence on mass blow-up.
DensityField pde_step(const ModelParams& p, const Grid& grid, const DensityField& field, double dt,
                      PdeOptions options = {});

struct DensityTrajectory {
  Grid grid;
  double dt = 0.0;
  std::vector<double> times;
  std::vector<double> nstar;
  std::vector<double> estar;
  std::vector<double> omegastar;
  std::vector<double> rstar;
  std::vector<std::vector<double>> densities;  // at every recorded time
  double clipped_mass = 0.0;
  double outflow_left = 0.0;
  double outflow_right = 0.0;
  std::size_t clip_events = 0;
  std::size_t steps = 0;
};

// Midpoint evaluation of u0 on the grid, renormalized to total mass `mass`.
DensityField initial_field(const Grid& grid, double x_min, double x_max, double r0, double mass = 1.0);

// Default time step: CFL safety 0.5 against the worst growth speed on the
// grid over R in [0, r_max].
double default_dt(const ModelParams& p, const Grid& grid);

// Integrates to t_end, recording observables and the density every
// record_dt. dt is shrunk so that record_dt is an integer number of steps.
DensityTrajectory solve(const ModelParams& p, const Grid& grid, const DensityField& initial, double t_end,
                        double dt, double record_dt, const WeightFunction& w, PdeOptions options = {});

// Per recorded interval: |Delta(R + chi E)/Delta t - [renewal(R) - chi <u, ell + d Id>]|
// with the bracket averaged over the interval end points.
std::vector<double> balance_residual(const DensityTrajectory& traj, const ModelParams& p);

// Test function phi(t, x) with its partial derivatives.
struct TestFunction {
  std::function<double(double, double)> value;
  std::function<double(double, double)> dt;
  std::function<double(double, double)> dx;
};

// Per recorded time t: |<u_t, phi_t> - <u_0, phi_0> - int_0^t <u_s, L phi_s> ds|
// with L phi = d_t phi + g d_x phi + b (phi(x0) + phi(x - x0) - phi) - d phi,
// trapezoid quadrature in x and in s.
std::vector<double> weak_form_residual(const DensityTrajectory& traj, const ModelParams& p, const TestFunction& phi);

// Signed jump-condition residual per recorded time:
// ((u(x0+) - u(x0-)) g(x0, R) - int b u) / (int b u + eps), using the nodes
// adjacent to x0.
std::vector<double> jump_consistency(const DensityTrajectory& traj, const ModelParams& p, double eps = 1e-12);

// Mass of the density per histogram bin (cell [x_j - dx/2, x_j + dx/2] split
// by overlap), mass outside the bins in below/above.
Histogram bin_density(const Grid& grid, const std::vector<double>& u, const std::vector<double>& edges);

}  // namespace egf
