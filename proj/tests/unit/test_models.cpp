#include "doctest.h"
#include "fixtures.hpp"

#include "srhc/linalg.hpp"
#include "srhc/rng.hpp"
#include "srhc/scenario.hpp"

#include <cmath>

using namespace srhc;
using fixtures::json;
using fixtures::scalar;

TEST_CASE("lq-scalar scenario file builds with its name and Lyapunov P") {
  const Scenario s = load_scenario_file(std::string(SRHC_SOURCE_DIR) + "/scenarios/lq-scalar.json");
  CHECK(s.name == "lq-scalar");
  REQUIRE(s.lq.has_value());

  // Scalar DARE with Q = R = 1 by plain iteration, then the Lyapunov fixed point.
  double pr = 1.0;
  for (int i = 0; i < 100000; ++i) pr = 1.0 + pr - pr * pr / (1.0 + pr);
  const double k = -pr / (1.0 + pr);
  const double acl = 1.0 + k;
  double p = 0.0;
  for (int i = 0; i < 10000 && std::abs(acl * acl * p - p + 1.0) >= 1e-12; ++i) p = acl * acl * p + 1.0;
  CHECK(s.lq->K_gain(0, 0) == doctest::Approx(k).epsilon(1e-12));
  CHECK(s.terminal_cost(scalar(1.0)) == doctest::Approx(p).epsilon(1e-10));
}

TEST_CASE("degenerate Gaussian noise is a valid deterministic system") {
  json c = builtin_config("lq");
  c["noise"]["covariance"] = json{{0.0}};
  const Scenario s = build_scenario(c);
  const ExpectationRule rule = s.noise.quadrature(9);
  CHECK(rule.size() == 1);
  CHECK(rule.nodes()[0](0) == 0.0);
  Rng rng = s.noise.sampler(0);
  CHECK(s.noise.sample(rng)(0) == 0.0);
}

TEST_CASE("non-PSD covariance is rejected") {
  json c = fixtures::scalar_quadratic(1, 1, 1, 1, 1, 0.5, 1.0, 2);
  c["system"] = json{{"kind", "linear-affine"}, {"A", {{1.0, 0.0}, {0.0, 1.0}}}, {"B", {{1.0}, {0.0}}}};
  c["noise"] = json{{"law", "gaussian"}, {"mean", {0.0, 0.0}}, {"covariance", {{1.0, 2.0}, {2.0, 1.0}}}};
  CHECK_THROWS_AS(build_scenario(c), ValidationError);
}

TEST_CASE("schema violations name the field") {
  json c = builtin_config("lq");
  c.erase("horizon");
  try {
    build_scenario(c);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("horizon") != std::string::npos);
  }
  c = builtin_config("lq");
  c["noise"]["mean"] = json{0.0, 0.0};
  CHECK_THROWS_AS(build_scenario(c), DimensionError);
  c = builtin_config("lq");
  c["cost"]["params"]["alpha"] = 1.5;
  CHECK_THROWS_AS(build_scenario(c), ValidationError);
}

TEST_CASE("unknown builtin lists the valid names") {
  try {
    builtin_scenario("nope");
    FAIL("expected not-found");
  } catch (const NotFoundError& e) {
    for (const auto& n : builtin_names()) CHECK(std::string(e.what()).find(n) != std::string::npos);
  }
}

TEST_CASE("builtin cost examples") {
  const Scenario ind = builtin_scenario("integrator-indicator");
  CHECK(ind.stage_cost(scalar(3.0), scalar(0.0)) == 1.0);
  CHECK(ind.stage_cost(scalar(1.0), scalar(0.0)) == 0.0);
  CHECK(eval_stage_cost(ind, scalar(0.0), scalar(0.0)) == 0.0);
  CHECK(eval_stage_cost(ind, scalar(5.0), scalar(0.0)) == 1.0);
  CHECK_THROWS_AS(eval_stage_cost(ind, fixtures::vec({1.0, 2.0}), scalar(0.0)), DimensionError);

  const Scenario ex = builtin_scenario("integrator-exponential");
  CHECK(ex.terminal_cost(scalar(0.0)) == 1.0);

  json c = builtin_config("lq");
  c["cost"]["params"]["alpha"] = 0.0;
  const Scenario lq = build_scenario(c);
  CHECK(eval_stage_cost(lq, scalar(2.0), scalar(7.0)) == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("builtins: zero control admissible, costs nonnegative and separable") {
  for (const auto& name : builtin_names()) {
    CAPTURE(name);
    const Scenario s = builtin_scenario(name);
    CHECK(s.controls.contains_zero());
    const Eigen::Index d = s.system.state_dim, m = s.system.control_dim;
    for (std::uint64_t i = 1; i <= 10000; ++i) {
      Vector x(d), u(m);
      for (Eigen::Index j = 0; j < d; ++j) x(j) = 40.0 * halton(i, static_cast<unsigned>(j)) - 20.0;
      for (Eigen::Index j = 0; j < m; ++j) u(j) = 10.0 * halton(i, static_cast<unsigned>(d + j)) - 5.0;
      u = s.controls.project(u);
      const double c = s.stage_cost(x, u);
      REQUIRE(c >= 0.0);
      REQUIRE(s.terminal_cost(x) >= 0.0);
      REQUIRE(s.cost.separable.has_value());
      REQUIRE(c == s.cost.separable->state(x) + s.cost.separable->control(u));
    }
  }
}

TEST_CASE("control set membership agrees with projection") {
  const ControlSet sets[] = {ControlSet::box(fixtures::vec({-1, -2}), fixtures::vec({1, 0.5})),
                             ControlSet::norm_ball(2, 1.5), ControlSet::unconstrained(2)};
  for (const auto& set : sets) {
    for (std::uint64_t i = 1; i <= 2000; ++i) {
      const Vector u = fixtures::vec({6 * halton(i, 0) - 3, 6 * halton(i, 1) - 3});
      const Vector p = set.project(u);
      CHECK(set.contains(p));
      CHECK(set.contains(u) == (p == u));
    }
  }
}

TEST_CASE("linear-affine transition is exact") {
  Matrix a(2, 2), b(2, 1);
  a << 0.3, -1.2, 0.7, 0.9;
  b << 0.5, -2.0;
  const SystemModel sys = SystemModel::linear(a, b);
  for (std::uint64_t i = 1; i <= 200; ++i) {
    const Vector x = fixtures::vec({halton(i, 0) * 8 - 4, halton(i, 1) * 8 - 4});
    const Vector u = scalar(halton(i, 2) * 2 - 1);
    const Vector w = fixtures::vec({halton(i, 3) - 0.5, halton(i, 4) - 0.5});
    const Vector expect = a * x + b * u + w;
    CHECK((sys.step(x, u, w) - expect).norm() == 0.0);
  }
  CHECK_THROWS_AS(sys.step(scalar(1.0), scalar(0.0), scalar(0.0)), DimensionError);
}

TEST_CASE("seeded sampling is reproducible") {
  Matrix cov(2, 2);
  cov << 2.0, 0.5, 0.5, 1.0;
  const NoiseModel n = NoiseModel::gaussian(Vector::Zero(2), cov, 42);
  Rng r1 = n.sampler(7), r2 = n.sampler(7), r3 = n.sampler(8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const Vector a = n.sample(r1), b = n.sample(r2), c = n.sample(r3);
    CHECK(a == b);
    differs = differs || a != c;
  }
  CHECK(differs);
}

TEST_CASE("Gauss-Hermite rules reproduce Gaussian moments") {
  Matrix cov(2, 2);
  cov << 2.0, 0.5, 0.5, 1.0;
  const Vector mean = Vector::Zero(2);
  for (int n : {3, 5, 9}) {
    const ExpectationRule r = gaussian_rule(mean, cov, n);
    CHECK(std::abs(r.expect([](const Vector&) { return 1.0; }) - 1.0) <= 1e-10);
    CHECK(std::abs(r.expect([](const Vector& w) { return w.dot(w); }) - cov.trace()) <= 1e-10);
  }
  // Degree four: E[w^4] = 3 sigma^4.
  const ExpectationRule r1 = gaussian_rule(Vector::Zero(1), Matrix::Constant(1, 1, 2.0), 3);
  CHECK(std::abs(r1.expect([](const Vector& w) { return std::pow(w(0), 4); }) - 12.0) <= 1e-10);
}

TEST_CASE("scenario config round-trips") {
  for (const auto& name : builtin_names()) {
    const Scenario s = builtin_scenario(name);
    const Scenario t = parse_scenario(scenario_to_json(s).dump());
    CHECK(scenario_to_json(t) == scenario_to_json(s));
    const Vector x = Vector::Constant(s.system.state_dim, 1.25);
    const Vector u = Vector::Zero(s.system.control_dim);
    CHECK(t.stage_cost(x, u) == s.stage_cost(x, u));
    CHECK(t.terminal_cost(x) == s.terminal_cost(x));
  }
}

TEST_CASE("overrides use aliases and dotted paths") {
  json c = resolve_scenario_config("lq", {"N=5", "alpha=0.25", "solver.grid_points=51"});
  CHECK(c["horizon"] == 5);
  CHECK(c["cost"]["params"]["alpha"] == 0.25);
  CHECK(c["solver"]["grid_points"] == 51);
  CHECK_THROWS_AS(resolve_scenario_config("/no/such/file.json"), NotFoundError);
}
