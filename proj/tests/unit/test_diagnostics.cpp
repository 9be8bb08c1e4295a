#include <cmath>
#include <random>

#include "doctest.h"
#include "egf/diagnostics.hpp"

using namespace egf;

namespace {

Trajectory constant_traj(std::size_t replica, double level) {
  Trajectory t;
  t.replica = replica;
  t.k = 10;
  t.times = {0.0, 1.0, 2.0};
  t.n = t.e = t.omega = t.r = {level, level, level};
  return t;
}

}  // namespace

TEST_CASE("pair_measure on a state") {
  PopulationState s({1.0, 2.0, 3.0}, 1.0, 3);
  CHECK(pair_measure(s, [](double x) { return x; }) == doctest::Approx(2.0));
  PopulationState empty({}, 1.0, 3);
  CHECK(pair_measure(empty, [](double) { return 5.0; }) == 0.0);
}

TEST_CASE("pair_measure on a histogram agrees with the state up to the bin width") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> unif(0.5, 4.5);
  std::vector<double> xs(2000);
  for (double& x : xs) x = unif(gen);
  PopulationState s(xs, 1.0, 2000);
  HistogramSpec spec{0.0, 5.0, 1000};
  auto h = make_histogram(s.energies(), 1.0 / 2000.0, spec.edges());
  auto phi = [](double x) { return std::sin(x); };
  // |sin'| <= 1, so each individual moves by at most half a bin width.
  CHECK(std::abs(pair_measure(s, phi) - pair_measure(h, phi)) <= 0.5 * 5.0 / 1000.0);
}

TEST_CASE("summarize_ensemble") {
  auto one = summarize_ensemble({constant_traj(0, 2.0)});
  CHECK(one.n.variance[1] == 0.0);

  auto two = summarize_ensemble({constant_traj(1, 5.0), constant_traj(0, 2.0)});
  CHECK(two.replicas == 2);
  CHECK(two.n.mean[2] == doctest::Approx(3.5));
  CHECK(two.n.variance[2] == doctest::Approx(4.5));
  CHECK(two.e.min[0] == 2.0);
  CHECK(two.e.max[0] == 5.0);

  auto bad = constant_traj(2, 1.0);
  bad.times[1] = 1.5;
  CHECK_THROWS_AS(summarize_ensemble({constant_traj(0, 1.0), bad}), std::invalid_argument);
  CHECK_THROWS_AS(summarize_ensemble({}), std::invalid_argument);
}

TEST_CASE("summarize_ensemble is independent of input order") {
  std::vector<Trajectory> a{constant_traj(0, 0.1), constant_traj(1, 0.7), constant_traj(2, 0.3)};
  std::vector<Trajectory> b{a[2], a[0], a[1]};
  auto sa = summarize_ensemble(a);
  auto sb = summarize_ensemble(b);
  CHECK(sa.n.mean == sb.n.mean);
  CHECK(sa.n.variance == sb.n.variance);
}

TEST_CASE("PDE compared to itself has zero error") {
  ModelParams p{AllometricParams{}};
  auto g = Grid::aligned(1.0, 25, 6.0);
  auto tr = solve(p, g, initial_field(g, 1.0, 5.0, 1.0), 2.0, default_dt(p, g), 0.1, make_weight(0.25, 0.625));
  const auto edges = HistogramSpec{}.edges();
  auto s = summary_from_pde(tr, edges, {0.0, 1.0});
  auto rep = compare_to_pde(s, tr, 0.0, 2.0, {0.0, 1.0});
  for (const auto& [name, e] : rep.errors) {
    CHECK(e.sup_abs == 0.0);
    CHECK(e.sup_rel == 0.0);
  }
  for (const auto& [t, d] : rep.snapshots) CHECK(d.l1 == 0.0);
  CHECK_THROWS_AS(compare_to_pde(s, tr, 3.0, 4.0, {}), std::invalid_argument);
}

TEST_CASE("disjoint histograms are at L1 distance 2") {
  const std::vector<double> edges{0.0, 1.0, 2.0};
  Histogram a{edges, {1.0, 0.0}};
  Histogram b{edges, {0.0, 1.0}};
  CHECK(l1_distance(a, b) == doctest::Approx(2.0));
  Histogram empty{edges, {0.0, 0.0}};
  CHECK(std::isnan(l1_distance(a, empty)));
}

TEST_CASE("QV scaling of a pure-death population") {
  AllometricParams a;
  a.alpha = a.gamma = a.beta = a.delta = 0.0;
  a.c_beta = 0.0;
  a.c_delta = 0.7;
  a.c_gamma = 3.5;
  SimConfig cfg;
  cfg.model = ModelParams(a);
  cfg.initial.r0 = 2.0;
  cfg.freeze_resource = true;
  cfg.seed = 21;
  cfg.record_dt = 0.5;
  auto res = qv_scaling_test(cfg, {100, 400, 1600}, 100, [](double) { return 1.0; }, 1.0);
  // Var N_t = p (1 - p) / K with p = exp(-0.7).
  const double p = std::exp(-0.7);
  CHECK(res.variances[0] == doctest::Approx(p * (1 - p) / 100).epsilon(0.35));
  CHECK(res.slope == doctest::Approx(-1.0).epsilon(0.2));
  CHECK(res.ci_lo <= -1.0);
  CHECK(res.ci_hi >= -1.0);
}

TEST_CASE("QV preconditions") {
  std::map<std::int64_t, std::vector<double>> one{{100, std::vector<double>(60, 1.0)}};
  CHECK_THROWS_AS(qv_scaling_from_samples(one), std::invalid_argument);
  std::map<std::int64_t, std::vector<double>> flat{
      {100, std::vector<double>(60, 0.0)}, {200, std::vector<double>(60, 0.0)}, {400, std::vector<double>(60, 0.0)}};
  CHECK_THROWS_AS(qv_scaling_from_samples(flat), std::domain_error);
}

TEST_CASE("biomass audit") {
  ModelParams p{AllometricParams{}};
  SimConfig cfg;
  cfg.k = 40;
  cfg.t_end = 5.0;
  auto tr = simulate(cfg, 0);
  CHECK(biomass_audit(tr, p) == 0);
  // sup |renewal| = 0.55 on [0, 2].
  tr.e[7] = tr.e[0] + tr.r[0] + 0.55 * tr.times[7] + 1e-3;
  tr.r[7] = 0.0;
  CHECK(biomass_audit(tr, p) == 1);

  auto g = Grid::aligned(1.0, 25, 6.0);
  auto pde = solve(p, g, initial_field(g, 1.0, 5.0, 1.0), 5.0, default_dt(p, g), 0.1, make_weight(0, 0));
  CHECK(biomass_audit(pde, p) == 0);
}

TEST_CASE("KS test") {
  std::mt19937_64 gen(8);
  std::exponential_distribution<double> ex(2.0);
  std::vector<double> xs(5000);
  for (double& x : xs) x = ex(gen);
  CHECK(ks_test_exponential(xs, 2.0).p_value > 0.01);
  CHECK(ks_test_exponential(xs, 2.5).p_value < 1e-6);
  // D for a single point at the median is 1/2.
  CHECK(ks_test({0.0}, [](double x) { return 0.5 + 0.5 * std::tanh(x); }).statistic == doctest::Approx(0.5));
}

TEST_CASE("smooth bump") {
  auto phi = smooth_bump(3.0, 1.5);
  CHECK(phi(3.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(phi(1.5) == 0.0);
  CHECK(phi(5.0) == 0.0);
  CHECK(phi(4.0) > 0.0);
}
