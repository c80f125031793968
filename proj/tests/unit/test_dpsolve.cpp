#include "doctest.h"
#include "fixtures.hpp"

#include "srhc/dpsolve.hpp"
#include "srhc/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

using namespace srhc;
using fixtures::scalar;

namespace {

// E[L(m + sigma Z)] for the clamped piecewise-linear interpolant L, by a fine
// trapezoid rule in z.
double interpolant_expectation_oracle(const std::vector<double>& nodes, const std::vector<double>& values, double m,
                                      double sigma) {
  auto L = [&](double y) {
    if (y <= nodes.front()) return values.front();
    if (y >= nodes.back()) return values.back();
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), y);
    const std::size_t j = static_cast<std::size_t>(it - nodes.begin());
    const double t = (y - nodes[j - 1]) / (nodes[j] - nodes[j - 1]);
    return (1 - t) * values[j - 1] + t * values[j];
  };
  const double h = 2e-4;
  double acc = 0.0;
  for (double z = -12.0; z <= 12.0 + 1e-12; z += h) {
    const double w = (std::abs(z) > 12.0 - 1e-12 ? 0.5 : 1.0) * std::exp(-0.5 * z * z);
    acc += w * L(m + sigma * z);
  }
  return acc * h / std::sqrt(2.0 * M_PI);
}

}  // namespace

TEST_CASE("enumerable toy matches exhaustive policy search exactly") {
  const Scenario s = build_scenario(fixtures::enumerable_toy());
  const ValueTable v = solve_horizon(s);
  REQUIRE(v.grid->size() == 5);
  REQUIRE(v.control_set.size() == 3);

  const double nodes[5] = {-2, -1, 0, 1, 2};
  const double controls[3] = {-1, 0, 1};
  const double noise[2] = {-1, 1};
  auto idx = [](double x) { return static_cast<int>(x + 2); };
  auto f = [](double x, double u, double w) { return std::clamp(x + u + w, -2.0, 2.0); };
  auto c = [](double x, double u) { return 0.5 * x * x + 0.5 * u * u; };

  std::array<double, 5> best;
  best.fill(std::numeric_limits<double>::infinity());
  int pol[10];
  for (int code = 0; code < 59049; ++code) {
    int r = code;
    for (int& p : pol) p = r % 3, r /= 3;
    for (int i0 = 0; i0 < 5; ++i0) {
      const double x0 = nodes[i0];
      const double u0 = controls[pol[i0]];
      double total = 0.0;
      for (double w0 : noise) {
        const double x1 = f(x0, u0, w0);
        const double u1 = controls[pol[5 + idx(x1)]];
        for (double w1 : noise) {
          const double x2 = f(x1, u1, w1);
          total += c(x0, u0) + c(x1, u1) + x2 * x2;
        }
      }
      best[i0] = std::min(best[i0], total / 4.0);
    }
  }
  for (int i = 0; i < 5; ++i) {
    CAPTURE(i);
    CHECK(v.values[0][static_cast<std::size_t>(i)] == best[i]);
  }
}

TEST_CASE("backup examples") {
  // Zero noise, next value zero, control-only cost: the zero control wins.
  const Scenario s = build_scenario(fixtures::scalar_quadratic(1, 1, 0, 1, 1, 1.0, 0.0, 1));
  const ValueMap zero = [](const Vector&) { return 0.0; };
  const BackupResult r = bellman_backup(s, zero, scalar(1.5));
  CHECK(r.value == 0.0);
  CHECK(r.control(0) == 0.0);

  const Scenario ind = builtin_scenario("integrator-indicator");
  CHECK(bellman_backup(ind, zero, scalar(0.0)).value == 0.0);

  CHECK_THROWS_AS(bellman_backup(s, zero, scalar(0.0), {}, dp_noise_rule(s)), Error);
}

TEST_CASE("ties go to the lowest control index") {
  const Scenario s = build_scenario(fixtures::scalar_quadratic(1, 1, 0, 1, 1, 0.0, 0.0, 1));
  const ValueMap zero = [](const Vector&) { return 0.0; };
  const std::vector<Vector> controls = {scalar(0.5), scalar(-0.5), scalar(0.0)};
  const BackupResult r = bellman_backup(s, zero, scalar(1.0), controls, dp_noise_rule(s));
  CHECK(r.control_index == 0);
}

TEST_CASE("backup is monotone in the next value") {
  const Scenario s = build_scenario(fixtures::scalar_quadratic(1, 1, 1, 1, 1, 0.5, 1.0, 1));
  const ValueMap v1 = [](const Vector& x) { return x.squaredNorm(); };
  const ValueMap v2 = [](const Vector& x) { return x.squaredNorm() + 1.0 + std::abs(x(0)); };
  for (double x = -5.0; x <= 5.0; x += 0.25) CHECK(bellman_backup(s, v1, scalar(x)).value <= bellman_backup(s, v2, scalar(x)).value);
}

TEST_CASE("closed-form interpolant expectation") {
  const Grid g = Grid::uniform(scalar(-3.0), scalar(3.0), {13});
  std::vector<double> nodes, values;
  for (std::size_t i = 0; i < g.size(); ++i) {
    nodes.push_back(g.node(i)(0));
    values.push_back(std::exp(std::abs(nodes.back())) + 0.3 * nodes.back());
  }
  for (double m : {-4.0, -1.3, 0.0, 0.77, 2.9}) {
    for (double sigma : {0.2, 1.0, 2.5}) {
      CHECK(gaussian_expectation_of_interpolant(g, values, m, sigma) ==
            doctest::Approx(interpolant_expectation_oracle(nodes, values, m, sigma)).epsilon(1e-8));
    }
  }
  CHECK(gaussian_expectation_of_interpolant(g, values, 0.77, 0.0) == doctest::Approx(g.interpolate(values, scalar(0.77))));
}

TEST_CASE("single stage with zero stage cost minimizes the expected terminal cost") {
  const Scenario s = build_scenario(fixtures::scalar_quadratic(1, 1, 0, 1, 1, 0.0, 1.0, 1));
  const ValueTable v = solve_horizon(s);
  std::vector<double> nodes, terminal;
  for (std::size_t i = 0; i < v.grid->size(); ++i) {
    nodes.push_back(v.grid->node(i)(0));
    terminal.push_back(nodes.back() * nodes.back());
  }
  for (std::size_t i = 0; i < v.grid->size(); i += 10) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& u : v.control_set) best = std::min(best, interpolant_expectation_oracle(nodes, terminal, nodes[i] + u(0), 1.0));
    CHECK(v.values[0][i] == doctest::Approx(best).epsilon(1e-7));
  }
}

TEST_CASE("terminal stage equals the final cost and values are nonnegative") {
  for (const char* name : {"integrator-indicator", "integrator-exponential"}) {
    const Scenario s = builtin_scenario(name);
    const ValueTable v = solve_horizon(s);
    CAPTURE(name);
    for (std::size_t i = 0; i < v.grid->size(); ++i) {
      REQUIRE(v.values[static_cast<std::size_t>(v.horizon)][i] == s.terminal_cost(v.grid->node(i)));
      for (int k = 0; k <= v.horizon; ++k) REQUIRE(v.values[static_cast<std::size_t>(k)][i] >= 0.0);
    }
    if (std::string(name) == "integrator-indicator") {
      const RecedingHorizonPolicy rh = extract_rh_policy(v, s.controls);
      for (double x = -12.0; x <= 12.0; x += 0.01) REQUIRE(std::abs(rh(scalar(x))(0)) <= 1.0);
    }
  }
}

TEST_CASE("grid solution of a scalar LQ problem against the Riccati recursion") {
  const Scenario s = build_scenario(fixtures::scalar_quadratic(1, 1, 1, 1, 1, 0.5, 1.0, 2));
  const FiniteHorizonLq lq = finite_horizon_lq_value(Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Constant(1, 1, 0.5),
                                                     Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1), Matrix::Ones(1, 1), 2);
  const ValueTable v = solve_horizon(s);
  const RecedingHorizonPolicy rh = extract_rh_policy(v, s.controls);
  const double du = 12.0 / 240.0;
  for (std::size_t i = 0; i < v.grid->size(); ++i) {
    const Vector x = v.grid->node(i);
    if (std::abs(x(0)) > 3.0) continue;
    CHECK(std::abs(v.values[0][i] - lq.values[0](x)) <= 2e-2);
    CHECK(std::abs(rh(x)(0) - (lq.gains[0] * x)(0)) <= du);
  }

  // Symmetric problem: the policy is odd at the nodes.
  for (std::size_t i = 0; i < v.grid->size(); ++i) {
    const Vector x = v.grid->node(i);
    CHECK(std::abs(rh(x)(0) + rh(-x)(0)) <= du + 1e-12);
  }

  // Halving the spacing moves values toward the closed form.
  nlohmann::json coarse = fixtures::scalar_quadratic(1, 1, 1, 1, 1, 0.5, 1.0, 2);
  coarse["solver"]["grid_points"] = 61;
  const ValueTable vc = solve_horizon(build_scenario(coarse));
  double err_fine = 0.0, err_coarse = 0.0, change = 0.0;
  for (std::size_t i = 0; i < vc.grid->size(); ++i) {
    const Vector x = vc.grid->node(i);
    if (std::abs(x(0)) > 3.0) continue;
    const double fine = v.value(0, x);
    err_coarse = std::max(err_coarse, std::abs(vc.values[0][i] - lq.values[0](x)));
    err_fine = std::max(err_fine, std::abs(fine - lq.values[0](x)));
    change = std::max(change, std::abs(fine - vc.values[0][i]));
  }
  CHECK(err_fine < err_coarse);
  CHECK(change <= 5e-2);
}

TEST_CASE("stage policies and the solution wrapper") {
  const Scenario s = build_scenario(fixtures::scalar_quadratic(1, 1, 1, 1, 1, 0.5, 1.0, 2));
  CHECK(has_closed_form(s));
  const HorizonSolution cf = solve_value_function(s);
  CHECK(cf.source == "riccati");
  CHECK(cf.stages.length() == 2);
  const HorizonSolution dp = solve_value_function(s, true);
  CHECK(dp.source == "dp");
  CHECK(dp.stages.length() == 2);
  for (double x = -3.0; x <= 3.0; x += 0.5) CHECK(std::abs(dp.value(scalar(x)) - cf.value(scalar(x))) <= 2e-2);
  CHECK_FALSE(has_closed_form(builtin_scenario("integrator-indicator")));
}

TEST_CASE("value table csv has a header and one row per stage and node") {
  const Scenario s = build_scenario(fixtures::enumerable_toy());
  const ValueTable v = solve_horizon(s);
  std::ostringstream os;
  write_value_table_csv(os, v);
  const std::string text = os.str();
  CHECK(text.rfind("stage,", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 3 * 5);
}
