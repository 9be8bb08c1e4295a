#include <cmath>

#include "doctest.h"
#include "egf/flow.hpp"

using namespace egf;

namespace {

double chemostat(double r0, double t) { return 2.0 + (r0 - 2.0) * std::exp(-0.275 * t); }

// alpha = gamma = 1/2, phi(2) C_gamma - C_alpha = 2/7 * 7 - 1 = 1.
ModelParams sqrt_growth() {
  AllometricParams a;
  a.alpha = a.gamma = 0.5;
  a.c_gamma = 7.0;
  a.c_beta = a.c_delta = 0.0;
  return ModelParams(a);
}

}  // namespace

TEST_CASE("resource_derivative") {
  ModelParams p{AllometricParams{}};
  PopulationState empty({}, 2.0, 1);
  CHECK(resource_derivative(p, empty) == 0.0);
  PopulationState one_r({}, 1.0, 1);
  CHECK(resource_derivative(p, one_r) == doctest::Approx(0.275).epsilon(1e-15));
  PopulationState single({1.0}, 2.0, 1);
  CHECK(resource_derivative(p, single) == doctest::Approx(-800.0 / 7.0).epsilon(1e-14));
  PopulationState scaled({1.0}, 2.0, 100);
  CHECK(resource_derivative(p, scaled) == doctest::Approx(-8.0 / 7.0).epsilon(1e-14));
}

TEST_CASE("empty population follows the chemostat solution") {
  ModelParams p{AllometricParams{}};
  auto s = integrate_flow(p, PopulationState({}, 1.0, 1), 1.0, 1e-2);
  CHECK(std::abs(s.resource - 1.24043) < 1e-5);
  CHECK(std::abs(s.resource - chemostat(1.0, 1.0)) < 1e-12);
  CHECK(s.time == doctest::Approx(1.0));
}

TEST_CASE("RK4 error shrinks by about 16 when the substep halves") {
  ModelParams p{AllometricParams{}};
  const double exact = chemostat(0.0, 10.0);
  const double e1 = std::abs(integrate_flow(p, PopulationState({}, 0.0, 1), 10.0, 1.0).resource - exact);
  const double e2 = std::abs(integrate_flow(p, PopulationState({}, 0.0, 1), 10.0, 0.5).resource - exact);
  CHECK(e1 / e2 > 8.0);
  CHECK(e1 / e2 < 32.0);
}

TEST_CASE("separable growth under a frozen resource") {
  auto p = sqrt_growth();
  FlowLimits lim;
  lim.freeze_resource = true;
  auto s = integrate_flow(p, PopulationState({1.0}, 2.0, 1), 2.0, 1e-2, lim);
  CHECK(s.energies()[0] == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(s.resource == 2.0);
}

TEST_CASE("zero vector field leaves energies unchanged") {
  AllometricParams a;
  a.c_gamma = 3.5;  // phi(2) C_gamma = 1 = C_alpha
  ModelParams p(a);
  FlowLimits lim;
  lim.freeze_resource = true;
  auto s = integrate_flow(p, PopulationState({0.3, 2.5}, 2.0, 1), 7.0, 1e-2, lim);
  CHECK(s.energies()[0] == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(s.energies()[1] == doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("flow preserves the order of energies and keeps R in range") {
  ModelParams p{AllometricParams{}};
  PopulationState s({1.0, 2.0, 3.0, 4.5}, 1.0, 2);
  for (int i = 0; i < 20; ++i) {
    s = integrate_flow(p, s, 0.1, 1e-2);
    CHECK(s.resource >= 0.0);
    CHECK(s.resource <= 2.0);
    const auto e = s.energies();
    for (std::size_t j = 1; j < e.size(); ++j) CHECK(e[j - 1] < e[j]);
  }
}

TEST_CASE("vanishing energy is reported with the individual's id") {
  ModelParams p{AllometricParams{}};
  PopulationState s({0.05, 3.0}, 0.0, 1);
  const auto id = s.ids()[0];
  try {
    integrate_flow(p, s, 5.0, 1e-2);
    FAIL("expected VanishOrExplode");
  } catch (const VanishOrExplode& e) {
    CHECK(e.id == id);
    CHECK(e.direction == Direction::vanish);
    CHECK(e.time > 0.0);
  }
}

TEST_CASE("explosion past the ceiling") {
  auto p = sqrt_growth();
  FlowLimits lim;
  lim.freeze_resource = true;
  lim.ceiling = 3.0;
  CHECK_THROWS_AS(integrate_flow(p, PopulationState({1.0}, 2.0, 1), 2.0, 1e-2, lim), VanishOrExplode);
}

TEST_CASE("PopulationState bookkeeping") {
  PopulationState s({1.0, 2.0, 3.0}, 1.0, 3);
  CHECK(s.n() == doctest::Approx(1.0));
  CHECK(s.total_energy() == doctest::Approx(2.0));
  const auto id0 = s.ids()[0];
  const auto id2 = s.ids()[2];
  s.remove(id0);
  CHECK_FALSE(s.alive(id0));
  CHECK(s.energy(id2) == 3.0);
  CHECK_THROWS_AS(s.slot(id0), std::logic_error);
  const auto fresh = s.add(0.5);
  CHECK(s.energy(fresh) == 0.5);
  CHECK(s.size() == 3);
}

TEST_CASE("invalid step arguments") {
  ModelParams p{AllometricParams{}};
  CHECK_THROWS_AS(integrate_flow(p, PopulationState({}, 1.0, 1), 0.0, 1e-2), std::invalid_argument);
  CHECK_THROWS_AS(integrate_flow(p, PopulationState({}, 1.0, 1), 1.0, 0.0), std::invalid_argument);
}
