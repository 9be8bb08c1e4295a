#include "doctest.h"
#include "egf/config.hpp"

using namespace egf;

namespace {

const char* kReference = R"(# reference constants
[model]
alpha = 0.75
beta = -0.25
gamma = 0.75
delta = -0.25
C_alpha = 1
C_beta = 0.1
C_gamma = 2
C_delta = 0.05
kappa = 5
D = 0.275
R_in = 2
R_max = 2
chi = 200
x0 = 1

[simulation]
K = 100
T = 50
R0 = 1
seed = 42
snapshots = 0, 5, 20
vanish_policy = annihilate

[weight]
kappa1 = 0.25
kappa2 = 0.625
)";

void check_same(const RunConfig& a, const RunConfig& b) {
  CHECK(serialize_config(a) == serialize_config(b));
  CHECK(a.model.alpha == b.model.alpha);
  CHECK(a.model.d_dilution == b.model.d_dilution);
  CHECK(a.k == b.k);
  CHECK(a.t_end == b.t_end);
  CHECK(a.seed == b.seed);
  CHECK(a.snapshots == b.snapshots);
  CHECK(a.vanish_policy == b.vanish_policy);
  CHECK(a.pde.nodes_per_x0 == b.pde.nodes_per_x0);
  CHECK(config_hash(a) == config_hash(b));
}

}  // namespace

TEST_CASE("INI keys map onto the run configuration") {
  auto c = parse_config_text(kReference);
  CHECK(c.model.c_gamma == 2.0);
  CHECK(c.model.chi == 200.0);
  CHECK(c.k == 100);
  CHECK(c.t_end == 50.0);
  CHECK(c.seed == 42);
  CHECK(c.snapshots == std::vector<double>{0.0, 5.0, 20.0});
  CHECK(c.vanish_policy == VanishPolicy::annihilate);
  CHECK(c.kappa2 == 0.625);
}

TEST_CASE("round trips through INI and JSON") {
  auto c = parse_config_text(kReference);
  c.model.kappa = 0.1 + 0.2;  // not exactly representable in short decimal
  c.pde.dt = 1.0 / 3.0;
  check_same(c, parse_config_text(serialize_config(c)));
  check_same(c, parse_config_json(config_to_json(c)));
  check_same(c, parse_config(config_to_json(c)));
  CHECK(config_hash(c).size() == 16);
  auto d = c;
  d.seed = 43;
  CHECK(config_hash(c) != config_hash(d));
}

TEST_CASE("malformed input") {
  CHECK_THROWS_AS(parse_config_text("[model]\nalpha = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[model]\nalpha = 0.5x\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[modle]\nalpha = 0.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[model]\nepsilon = 0.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("alpha = 0.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[model]\nalpha = 0.5\nalpha = 0.6\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[simulation]\nK = -3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[simulation]\nvanish_policy = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[model]\nkappa = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[weight]\nkappa1 = 1\nkappa2 = 0.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_json("{\"model\": {\"alpha\": 0.5"), ConfigError);
  CHECK_THROWS_AS(parse_config_json("{\"model\": {\"alfa\": 0.5}}"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST_CASE("sim_config carries the run settings") {
  auto c = parse_config_text(kReference);
  auto s = c.sim_config();
  CHECK(s.k == 100);
  CHECK(s.t_end == 50.0);
  CHECK(s.seed == 42);
  CHECK(s.snapshot_times == c.snapshots);
  CHECK(s.initial.x_min == 1.0);
  CHECK(s.weight.kappa1() == 0.25);
}
