#include <cmath>
#include <numeric>

#include "doctest.h"
#include "egf/pde.hpp"

using namespace egf;

namespace {

double mass(const std::vector<double>& u, double dx) { return std::accumulate(u.begin(), u.end(), 0.0) * dx; }

// alpha = gamma = beta = delta = 0 with b = C_beta above x0, d = C_delta and
// g = phi(2) C_gamma - C_alpha = 2/7 C_gamma - 1 at the frozen R = 2.
ModelParams constant_model(double b0, double d0, double c_gamma) {
  AllometricParams a;
  a.alpha = a.gamma = a.beta = a.delta = 0.0;
  a.c_beta = b0;
  a.c_delta = d0;
  a.c_gamma = c_gamma;
  return ModelParams(a);
}

DensityField bump(const Grid& g, double center, double width, double r) {
  DensityField f;
  f.u.assign(g.nodes, 0.0);
  for (std::size_t j = 0; j < g.nodes; ++j) {
    const double z = (g.x(j) - center) / width;
    if (std::abs(z) < 1) f.u[j] = std::exp(-1.0 / (1 - z * z));
  }
  f.r = r;
  return f;
}

}  // namespace

TEST_CASE("aligned grid places x0 on a node") {
  auto g = Grid::aligned(1.0, 100, 6.0);
  CHECK(g.dx == doctest::Approx(0.01));
  CHECK(g.m == 100);
  CHECK(g.nodes == 600);
  CHECK(g.x(g.x0_index()) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(g.x_max() == doctest::Approx(6.0));
}

TEST_CASE("empty density: resource follows the chemostat") {
  ModelParams p{AllometricParams{}};
  auto g = Grid::aligned(1.0, 20, 6.0);
  DensityField f;
  f.u.assign(g.nodes, 0.0);
  f.r = 1.0;
  const double dt = 1e-3;
  for (int i = 0; i < 1000; ++i) f = pde_step(p, g, f, dt);
  for (double v : f.u) CHECK(v == 0.0);
  const double exact = 2.0 - std::exp(-0.275);
  CHECK(std::abs(f.r - exact) < 0.275 * dt);
}

TEST_CASE("pure transport moves a bump and conserves mass") {
  const double c = 0.5;
  auto p = constant_model(0.0, 0.0, 3.5 * (1.0 + c));  // g = c
  auto g = Grid::aligned(1.0, 50, 8.0);
  PdeOptions opt;
  opt.freeze_resource = true;
  PdeOperator op(p, g, opt);
  auto f = bump(g, 2.0, 0.5, 2.0);
  const double dt = 0.5 * op.max_stable_dt(2.0);
  double m0 = mass(f.u, g.dx);
  double first_moment0 = 0.0;
  for (std::size_t j = 0; j < g.nodes; ++j) first_moment0 += g.x(j) * f.u[j] * g.dx;
  const int steps = 400;
  for (int i = 0; i < steps; ++i) {
    op.step(f, dt);
    const double m1 = mass(f.u, g.dx);
    CHECK(std::abs(m1 - m0) <= 1e-12 * m0);
    m0 = m1;
  }
  double first_moment = 0.0;
  for (std::size_t j = 0; j < g.nodes; ++j) first_moment += g.x(j) * f.u[j] * g.dx;
  CHECK(first_moment / m0 - first_moment0 / m0 == doctest::Approx(c * dt * steps).epsilon(1e-9));
  CHECK(f.clip_events == 0);
}

TEST_CASE("pure decay") {
  const double d0 = 0.4;
  auto p = constant_model(0.0, d0, 3.5);
  auto g = Grid::aligned(1.0, 20, 6.0);
  PdeOptions opt;
  opt.freeze_resource = true;
  auto f = bump(g, 3.0, 1.0, 2.0);
  const auto u0 = f.u;
  const double dt = 1e-3;
  for (int i = 0; i < 1000; ++i) f = pde_step(p, g, f, dt, opt);
  for (std::size_t j = 0; j < g.nodes; ++j) CHECK(std::abs(f.u[j] - u0[j] * std::exp(-d0)) <= 1e-3 * u0[j] + 1e-300);
}

TEST_CASE("CFL guard names the required step") {
  ModelParams p{AllometricParams{}};
  auto g = Grid::aligned(1.0, 100, 6.0);
  auto f = initial_field(g, 1.0, 5.0, 1.0);
  PdeOperator op(p, g);
  const double limit = op.max_stable_dt(f.r);
  try {
    op.step(f, 2.0 * limit);
    FAIL("expected CflViolation");
  } catch (const CflViolation& e) {
    CHECK(e.required_dt == doctest::Approx(limit));
    CHECK(std::string(e.what()).find("dt <=") != std::string::npos);
  }
  CHECK_NOTHROW(op.step(f, limit));
}

TEST_CASE("mass blow-up raises PdeDivergence") {
  auto p = constant_model(5.0, 0.0, 7.0);  // g = 1, births at rate 5
  auto g = Grid::aligned(1.0, 10, 6.0);
  PdeOptions opt;
  opt.freeze_resource = true;
  opt.mass_limit = 2.0;
  auto f = bump(g, 3.0, 1.0, 2.0);
  for (double& v : f.u) v /= mass(f.u, g.dx);
  CHECK_THROWS_AS(solve(p, g, f, 10.0, 0.01, 0.1, make_weight(0, 0), opt), PdeDivergence);
}

TEST_CASE("initial field carries unit mass on [1, 5]") {
  auto g = Grid::aligned(1.0, 100, 6.0);
  auto f = initial_field(g, 1.0, 5.0, 1.0);
  CHECK(mass(f.u, g.dx) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.u[g.x0_index()] == 0.0);
  CHECK(f.r == 1.0);
}

TEST_CASE("solve records observables at record times") {
  ModelParams p{AllometricParams{}};
  auto g = Grid::aligned(1.0, 50, 6.0);
  auto f = initial_field(g, 1.0, 5.0, 1.0);
  const auto w = make_weight(0.25, 0.625);
  auto tr = solve(p, g, f, 2.0, default_dt(p, g), 0.5, w);
  REQUIRE(tr.times.size() == 5);
  CHECK(tr.times.back() == 2.0);
  CHECK(tr.nstar[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(tr.estar[0] == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(tr.densities.size() == 5);
  for (double n : tr.nstar) CHECK(n > 0.0);
  for (double r : tr.rstar) {
    CHECK(r >= 0.0);
    CHECK(r <= 2.0);
  }
}

TEST_CASE("weak form with phi = 0 is exactly 0") {
  ModelParams p{AllometricParams{}};
  auto g = Grid::aligned(1.0, 25, 6.0);
  auto tr = solve(p, g, initial_field(g, 1.0, 5.0, 1.0), 1.0, default_dt(p, g), 0.1, make_weight(0, 0));
  TestFunction zero{[](double, double) { return 0.0; }, [](double, double) { return 0.0; },
                    [](double, double) { return 0.0; }};
  for (double v : weak_form_residual(tr, p, zero)) CHECK(v == 0.0);
}

namespace {

struct Refined {
  double balance;
  double weak;
  double weak_ratio;  // residual / <u_t, phi>
};

// Series maxima over [0, t_end], record step 10 dt.
Refined refine_run(std::size_t per, double t_end) {
  ModelParams p{AllometricParams{}};
  auto g = Grid::aligned(1.0, per, 6.0);
  const double dt = default_dt(p, g);
  auto tr = solve(p, g, initial_field(g, 1.0, 5.0, 1.0), t_end, dt, 10 * dt, make_weight(0, 0));
  auto bump_fn = [](double x) {
    const double z = (x - 2.0) / 1.5;
    return std::abs(z) < 1 ? std::exp(-1.0 / (1 - z * z)) : 0.0;
  };
  auto bump_dx = [&](double x) {
    const double z = (x - 2.0) / 1.5;
    return std::abs(z) < 1 ? bump_fn(x) * (-2 * z / ((1 - z * z) * (1 - z * z))) / 1.5 : 0.0;
  };
  TestFunction phi{[&](double, double x) { return bump_fn(x); }, [](double, double) { return 0.0; },
                   [&](double, double x) { return bump_dx(x); }};
  const auto bal = balance_residual(tr, p);
  const auto wk = weak_form_residual(tr, p, phi);
  double pairing = 0.0;
  const auto& u = tr.densities.back();
  for (std::size_t j = 0; j < u.size(); ++j) pairing += bump_fn(g.x(j)) * u[j] * g.dx;
  return {*std::max_element(bal.begin(), bal.end()), *std::max_element(wk.begin(), wk.end()),
          wk.back() / pairing};
}

}  // namespace

TEST_CASE("residuals shrink under refinement") {
  const auto coarse = refine_run(100, 1.0);
  const auto fine = refine_run(200, 1.0);
  CHECK(coarse.balance / fine.balance >= 1.7);
  CHECK(coarse.weak / fine.weak >= 1.7);
  // Energies shrink fast under these rates; at t = 1 the bump on (0.5, 3.5)
  // still sees most of the mass.
  CHECK(fine.weak_ratio <= 0.05);
}

TEST_CASE("jump consistency improves under refinement at early times") {
  ModelParams p{AllometricParams{}};
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t per : {25, 50, 100}) {
    auto g = Grid::aligned(1.0, per, 6.0);
    const double dt = default_dt(p, g);
    auto tr = solve(p, g, initial_field(g, 1.0, 5.0, 1.0), 0.5, dt, 0.5, make_weight(0, 0));
    const double j = std::abs(jump_consistency(tr, p).back());
    CHECK(j < prev);
    prev = j;
  }
}

TEST_CASE("bin_density splits cells by overlap") {
  Grid g;
  g.dx = 0.5;
  g.m = 2;
  g.nodes = 4;  // nodes at 0.5, 1, 1.5, 2
  std::vector<double> u{1.0, 1.0, 1.0, 1.0};
  auto h = bin_density(g, u, {0.5, 1.0, 2.0});
  // Cells: [0.25,0.75] [0.75,1.25] [1.25,1.75] [1.75,2.25], each of mass 0.5.
  CHECK(h.below == doctest::Approx(0.25));
  CHECK(h.mass[0] == doctest::Approx(0.5));
  CHECK(h.mass[1] == doctest::Approx(1.0));
  CHECK(h.above == doctest::Approx(0.25));
}
