#include "doctest.h"
#include "fixtures.hpp"

#include "srhc/linalg.hpp"
#include "srhc/policy.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

using namespace srhc;
using fixtures::scalar;
using fixtures::vec;

namespace {

StagePolicy gain(double k) { return StagePolicy::linear_gain(Matrix::Constant(1, 1, k)); }

PolicySequence seq(std::initializer_list<double> gains) {
  std::vector<StagePolicy> v;
  for (double k : gains) v.push_back(gain(k));
  return PolicySequence(v);
}

std::vector<double> gains_of(const PolicySequence& p) {
  std::vector<double> out;
  for (const auto& s : p.stages()) out.push_back(s.gain()(0, 0));
  return out;
}

Matrix rotation(double theta) {
  Matrix a(2, 2);
  a << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return a;
}

NoiseModel unit_gaussian(Eigen::Index d) { return NoiseModel::gaussian(Vector::Zero(d), Matrix::Identity(d, d)); }

// E[h(Z)] for standard normal Z over the real line.
double normal_expectation(const std::function<double(double)>& h) {
  const double c = 1.0 / std::sqrt(2.0 * M_PI);
  auto f = [&](double w) { return std::abs(w) > 40.0 ? 0.0 : h(w) * c * std::exp(-0.5 * w * w); };
  boost::math::quadrature::exp_sinh<double> es;
  return es.integrate([&](double w) { return f(w); }, 0.0, std::numeric_limits<double>::infinity()) +
         es.integrate([&](double w) { return f(-w); }, 0.0, std::numeric_limits<double>::infinity());
}

}  // namespace

TEST_CASE("concat lengths, identity and associativity") {
  const PolicySequence p2 = seq({1, 2}), p3 = seq({3, 4, 5}), e;
  CHECK(concat(p2, p3).length() == 5);
  CHECK(gains_of(concat(p2, p3)) == std::vector<double>{1, 2, 3, 4, 5});
  CHECK(gains_of(concat(e, p3)) == gains_of(p3));
  CHECK(gains_of(concat(p3, e)) == gains_of(p3));
  const PolicySequence p1 = seq({9});
  CHECK(gains_of(concat(concat(p1, p2), p3)) == gains_of(concat(p1, concat(p2, p3))));
  CHECK_THROWS_AS(concat(p2, PolicySequence({StagePolicy::linear_gain(Matrix::Ones(1, 2))})), DimensionError);
}

TEST_CASE("sat_radial examples") {
  CHECK(sat_radial(vec({3, 4}), 10) == vec({3, 4}));
  CHECK((sat_radial(vec({3, 4}), 1) - vec({0.6, 0.8})).norm() <= 1e-15);
  CHECK(sat_radial(vec({0, 0}), 1) == vec({0, 0}));
  for (std::uint64_t i = 1; i <= 500; ++i) {
    const Vector z = vec({20 * halton(i, 0) - 10, 20 * halton(i, 1) - 10});
    const Vector s = sat_radial(z, 2.5);
    CHECK(s.norm() <= 2.5 + 1e-12);
    CHECK(std::abs(s(0) * z(1) - s(1) * z(0)) <= 1e-12);
    CHECK(s.dot(z) >= 0.0);
  }
}

TEST_CASE("scalar saturation policy") {
  CHECK(scalar_sat_policy(0.5) == -0.5);
  CHECK(scalar_sat_policy(7) == -1.0);
  CHECK(scalar_sat_policy(-7) == 1.0);
  CHECK(scalar_sat_policy(1.0) == -1.0);
}

TEST_CASE("rho of the scalar stabilizer matches the closed form and a quadrature oracle") {
  const OrthoStabilizer s = make_ortho_stabilizer(Matrix::Ones(1, 1), Matrix::Ones(1, 1), unit_gaussian(1), 2.0);
  const double closed = std::log(2.0 * std::exp(0.5) * fixtures::normal_cdf(1.0));
  const double oracle = std::log(normal_expectation([](double w) { return std::exp(std::abs(w)); }));
  CHECK(std::abs(closed - oracle) <= 1e-9);
  CHECK(std::abs(s.rho - oracle) <= 1e-6);
  CHECK(std::abs(s.rho_example3 - std::log(std::sqrt(2.0 / M_PI))) <= 1e-6);
  CHECK(s.kappa == 1);
  CHECK(s.K_radius == doctest::Approx(2.0 * s.rho));
  CHECK(s.lambda_circ == doctest::Approx(std::exp(s.rho - 2.0)));
  CHECK(s.lambda_circ > 0.0);
  CHECK(s.lambda_circ < 1.0);
}

TEST_CASE("insufficient authority carries rho") {
  try {
    make_ortho_stabilizer(Matrix::Ones(1, 1), Matrix::Ones(1, 1), unit_gaussian(1), 0.1);
    FAIL("expected insufficient authority");
  } catch (const InsufficientAuthorityError& e) {
    CHECK(e.rho() > 1.0);
  }
}

TEST_CASE("rho of the planar rotation uses the chi(2) radial law") {
  const OrthoStabilizer s = make_ortho_stabilizer(rotation(M_PI / 4), Matrix::Identity(2, 2), unit_gaussian(2), 2.0);
  boost::math::quadrature::exp_sinh<double> es;
  const double m = es.integrate([](double r) { return r * std::exp(r - 0.5 * r * r); }, 0.0,
                                std::numeric_limits<double>::infinity());
  CHECK(s.kappa == 1);
  CHECK(std::abs(s.rho - std::log(m)) <= 1e-6);
  CHECK((s.A.transpose() * s.A - Matrix::Identity(2, 2)).norm() <= 1e-10);
}

TEST_CASE("reachability index and pseudoinverse identities") {
  Matrix b(2, 1);
  b << 1.0, 0.0;
  const Matrix a = rotation(0.7);
  CHECK(reachability_index(a, b) == 2);
  CHECK(reachability_index(Matrix::Identity(2, 2), Matrix::Identity(2, 2)) == 1);
  CHECK_THROWS_AS(reachability_index(Matrix::Identity(2, 2), b), Error);
  const OrthoStabilizer s = make_ortho_stabilizer(a, b, unit_gaussian(2), 6.0);
  CHECK(s.kappa == 2);
  CHECK(linalg::rank(s.reach_B) == 2);
  CHECK((s.reach_B * s.reach_pinv * s.reach_B - s.reach_B).norm() <= 1e-9);
  CHECK((s.reach_pinv - s.reach_B.inverse()).norm() <= 1e-9);

  const OrthoStabilizer s1 = make_ortho_stabilizer(Matrix::Ones(1, 1), Matrix::Constant(1, 1, 2.0), unit_gaussian(1), 2.0);
  CHECK(std::abs(s1.reach_pinv(0, 0) - 0.5) <= 1e-9);

  // A non-orthogonal or uncontrollable pair is rejected.
  CHECK_THROWS_AS(make_ortho_stabilizer(Matrix::Constant(1, 1, 2.0), Matrix::Ones(1, 1), unit_gaussian(1), 2.0), Error);
  CHECK_THROWS_AS(make_ortho_stabilizer(Matrix::Identity(2, 2), b, unit_gaussian(2), 6.0), Error);
}

TEST_CASE("ortho control blocks") {
  const OrthoStabilizer s = make_ortho_stabilizer(Matrix::Ones(1, 1), Matrix::Ones(1, 1), unit_gaussian(1), 2.0);
  CHECK(ortho_control_block(s, scalar(5.0)).at(0)(0) == doctest::Approx(-2.0));
  CHECK(ortho_control_block(s, scalar(0.5)).at(0)(0) == doctest::Approx(-0.5));
  CHECK(ortho_control_block(s, scalar(0.0)).at(0)(0) == 0.0);

  Matrix b(2, 1);
  b << 1.0, 0.0;
  const OrthoStabilizer s2 = make_ortho_stabilizer(rotation(0.7), b, unit_gaussian(2), 6.0);
  for (std::uint64_t i = 1; i <= 50; ++i) {
    const Vector x = vec({20 * halton(i, 0) - 10, 20 * halton(i, 1) - 10});
    const auto blk = ortho_control_block(s2, x);
    REQUIRE(blk.size() == 2);
    Vector stacked(2);
    stacked << blk[0](0), blk[1](0);
    const Vector expect = -s2.reach_pinv * sat_radial(s2.A_kappa * x, 6.0);
    CHECK((stacked - expect).norm() <= 1e-12);
    // Without noise the block lands on A^k x - sat(A^k x).
    Vector y = x;
    for (const auto& u : blk) y = s2.A * y + s2.B * u;
    CHECK((y - (s2.A_kappa * x - sat_radial(s2.A_kappa * x, 6.0))).norm() <= 1e-9);
  }
  for (const auto& u : ortho_control_block(s2, Vector::Zero(2))) CHECK(u.norm() == 0.0);
}

TEST_CASE("one-block drift of the scalar stabilizer") {
  const OrthoStabilizer s = make_ortho_stabilizer(Matrix::Ones(1, 1), Matrix::Ones(1, 1), unit_gaussian(1), 2.0);
  for (double x = 2.0 * s.rho + 1e-3; x <= 25.0; x += 0.37) {
    for (double sign : {-1.0, 1.0}) {
      const double xs = sign * x;
      const double m = xs - std::clamp(xs, -2.0, 2.0);
      const double ratio = normal_expectation([m, x](double w) { return std::exp(std::abs(m + w) - x); });
      CHECK(ratio <= s.lambda_circ + 1e-6);
    }
  }
}

TEST_CASE("policies stay in the control set") {
  const ControlSet box = ControlSet::box(vec({-1.0}), vec({0.5}));
  auto grid = std::make_shared<const Grid>(Grid::uniform(vec({-3.0}), vec({3.0}), {13}));
  std::vector<Vector> table;
  for (std::size_t i = 0; i < grid->size(); ++i) table.push_back(scalar(0.4 * grid->node(i)(0)));
  const StagePolicy policies[] = {
      StagePolicy::linear_gain(Matrix::Constant(1, 1, -2.0), box),
      StagePolicy::saturated_linear(Matrix::Constant(1, 1, -2.0), 0.75),
      StagePolicy::analytic("cube", 1, 1, [](const Vector& x) { return scalar(x(0) * x(0) * x(0)); }, box),
      StagePolicy::grid_table(grid, table, box)};
  for (const auto& p : policies) {
    for (std::uint64_t i = 1; i <= 10000; ++i) {
      const Vector u = p(scalar(40.0 * halton(i, 0) - 20.0));
      if (p.representation() == StagePolicy::Representation::saturated_linear)
        REQUIRE(std::abs(u(0)) <= 0.75 + 1e-15);
      else
        REQUIRE(box.contains(u));
    }
  }
}

TEST_CASE("grid-table lookups are exact at nodes") {
  auto grid = std::make_shared<const Grid>(Grid::uniform(vec({-2.0, -1.0}), vec({2.0, 3.0}), {9, 5}));
  std::vector<Vector> table;
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const Vector x = grid->node(i);
    table.push_back(vec({std::sin(x(0)) + 0.1 * x(1), std::cos(x(1))}));
  }
  const StagePolicy p = StagePolicy::grid_table(grid, table, ControlSet::unconstrained(2));
  for (std::size_t i = 0; i < grid->size(); ++i) CHECK(p(grid->node(i)) == table[i]);
  // Off-node: a convex combination of the neighbours; outside the box: clamped.
  const Vector mid = p(vec({0.25, 0.0}));
  CHECK(mid(0) == doctest::Approx(0.5 * (table[grid->flat_index({4, 1})](0) + table[grid->flat_index({5, 1})](0))));
  CHECK(p(vec({-9.0, -1.0})) == table[0]);
}

TEST_CASE("receding-horizon policy applies its first stage at every step") {
  const RecedingHorizonPolicy rh(gain(-0.4), "test");
  Vector x = scalar(3.0);
  for (int t = 0; t < 20; ++t) {
    CHECK(rh(x) == rh.first_stage()(x));
    x = x + rh(x);
  }
  const ControlLaw law = ControlLaw::stationary(rh);
  CHECK(law.block_length() == 1);
  CHECK(law.block(scalar(2.0)).at(0)(0) == doctest::Approx(-0.8));
}
