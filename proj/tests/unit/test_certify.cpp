#include "doctest.h"
#include "fixtures.hpp"

#include "srhc/certify.hpp"
#include "srhc/linalg.hpp"
#include "srhc/scenario.hpp"

#include <cmath>
#include <sstream>

using namespace srhc;
using fixtures::scalar;

namespace {

std::vector<Vector> scalar_states(double lo, double hi, int n) {
  std::vector<Vector> out;
  for (int i = 0; i < n; ++i) {
    const double x = lo + (hi - lo) * (i + 0.5) / n;
    out.push_back(scalar(x));
    out.push_back(scalar(-x));
  }
  return out;
}

double abs_value(const Vector& x) { return x.norm(); }

StagePolicy lq_gain(const Scenario& s) { return StagePolicy::linear_gain(s.lq->K_gain); }

}  // namespace

TEST_CASE("exclusion sets") {
  const ExclusionSet ball = ExclusionSet::norm_ball(2.0);
  CHECK(ball.contains(scalar(2.0)));
  CHECK_FALSE(ball.contains(scalar(2.0001)));
  CHECK(ball.gauge(fixtures::vec({3, 4})) == doctest::Approx(2.5));
  for (const auto& x : ball.sample_outside(2, 200, 4.0)) {
    CHECK(ball.gauge(x) > 1.0);
    CHECK(ball.gauge(x) <= 4.0 + 1e-12);
  }
  for (const auto& x : ball.sample_inside(2, 200)) CHECK(ball.contains(x));

  Matrix p(2, 2);
  p << 2.0, 0.5, 0.5, 1.0;
  const ExclusionSet ell = ExclusionSet::ellipsoid(p, 3.0);
  for (const auto& x : ell.sample_outside(2, 200, 3.0)) CHECK(x.dot(p * x) > 3.0);
  for (const auto& x : ell.sample_inside(2, 200)) CHECK(x.dot(p * x) <= 3.0 * (1 + 1e-12));

  const ExclusionSet iv = ExclusionSet::interval(-2.0, 2.0);
  CHECK(iv.contains(scalar(-2.0)));
  CHECK_FALSE(iv.contains(scalar(2.5)));
}

TEST_CASE("geometric drift of a halved chain with absolute-value Lyapunov function") {
  const NoiseModel noise = NoiseModel::gaussian(Vector::Zero(1), Matrix::Ones(1, 1));
  const TransitionKernel chain =
      TransitionKernel::quadrature([](const Vector& x, const Vector& w) { return Vector(0.5 * x + w); }, noise);
  const double mu = std::sqrt(2.0 / M_PI);

  for (double x : {-7.0, -1.0, 0.0, 0.3, 4.0}) {
    const Estimate e = chain.expect(scalar(x), abs_value);
    CHECK(e.mean == doctest::Approx(fixtures::folded_normal_mean(0.5 * x, 1.0)).epsilon(1e-9));
    CHECK(e.mean <= 0.5 * std::abs(x) + mu + 1e-12);
  }

  const ExclusionSet k = ExclusionSet::norm_ball(4.0 * mu);
  const DriftCertificate c = check_geometric_drift(chain, abs_value, 0.75, k, scalar_states(4.0 * mu, 40.0, 300));
  CHECK(c.pass);
  CHECK(c.test_points == 600);
  CHECK(c.worst_margin + c.ci_halfwidth <= 0.0);

  // Inside states are skipped and counted.
  const DriftCertificate c2 = check_geometric_drift(chain, abs_value, 0.75, k, {scalar(0.1), scalar(10.0)});
  CHECK(c2.skipped == 1);
  CHECK(c2.test_points == 1);

  // Too small a contraction factor fails.
  CHECK_FALSE(check_geometric_drift(chain, abs_value, 0.5, k, scalar_states(4.0 * mu, 40.0, 50)).pass);
}

TEST_CASE("deterministic contraction passes with zero margin") {
  const NoiseModel none = NoiseModel::gaussian(Vector::Zero(1), Matrix::Zero(1, 1));
  const TransitionKernel chain =
      TransitionKernel::quadrature([](const Vector& x, const Vector& w) { return Vector(0.5 * x + w); }, none);
  const DriftCertificate c =
      check_geometric_drift(chain, abs_value, 0.5, ExclusionSet::norm_ball(1.0), scalar_states(1.0, 10.0, 50));
  CHECK(c.pass);
  // The reported margin subtracts the 1e-6 tolerance; the raw margin is exactly zero.
  CHECK(c.worst_margin == doctest::Approx(-1e-6).epsilon(1e-9));
}

TEST_CASE("constant drift: unit steps without noise") {
  const NoiseModel none = NoiseModel::gaussian(Vector::Zero(1), Matrix::Zero(1, 1));
  const TransitionKernel chain = TransitionKernel::quadrature(
      [](const Vector& x, const Vector& w) { return Vector(x + scalar(scalar_sat_policy(x(0))) + w); }, none);
  const ExclusionSet k = ExclusionSet::interval(-2.0, 2.0);
  const DriftCertificate c = check_constant_drift(chain, abs_value, 1.0, k, 2.0, 1.0, scalar_states(2.0, 10.0, 100),
                                                  scalar_states(0.0, 2.0, 20));
  CHECK(c.pass);
  CHECK(c.worst_margin == doctest::Approx(-1e-6).epsilon(1e-9));
  // A larger drift requirement fails, as does a jump bound below one.
  CHECK_FALSE(check_constant_drift(chain, abs_value, 1.1, k, 2.0, 1.0, scalar_states(2.0, 10.0, 10), {}).pass);
  CHECK_FALSE(check_constant_drift(chain, abs_value, 1.0, k, 2.0, 0.9, scalar_states(2.0, 10.0, 10), {}).pass);
}

TEST_CASE("integrator with saturated feedback: drift, jump moment and the (A3) bound") {
  const Scenario s = builtin_scenario("integrator-indicator");
  const StagePolicy g = fixtures::neg_sat(s);
  const TransitionKernel chain = closed_loop_kernel(s, g);
  const ExclusionSet k = ExclusionSet::interval(-2.0, 2.0);

  // Noise is uniform on [-1, 1]; a unit step toward zero from |x| > 2 never crosses it.
  for (double x : {2.01, 3.5, 9.9}) CHECK(chain.expect(scalar(x), abs_value).mean == doctest::Approx(x - 1.0).epsilon(1e-12));

  // E(|u| + |w|)^4 with |u| = 1 and |w| the table midpoints.
  double m4 = 0.0;
  for (const auto& w : s.noise.table()) m4 += std::pow(1.0 + std::abs(w(0)), 4) / static_cast<double>(s.noise.table().size());
  const DriftCertificate cd =
      check_constant_drift(chain, abs_value, 1.0, k, 2.0, m4, scalar_states(2.0, 10.0, 200), scalar_states(0.0, 2.0, 50));
  CHECK(cd.pass);

  const A3Result a3 = check_a3(s, g, k);
  CHECK(a3.certificate.pass);
  double mean_abs = 0.0;
  for (const auto& w : s.noise.table()) mean_abs += std::abs(w(0)) / static_cast<double>(s.noise.table().size());
  CHECK(a3.b == doctest::Approx(mean_abs).epsilon(1e-12));

  // Enlarging K keeps a pass.
  CHECK(check_a3(s, g, ExclusionSet::interval(-4.0, 4.0)).certificate.pass);
}

TEST_CASE("LQ: (A3), Theorem 1, sandwich and geometric drift from costs") {
  const Scenario s = builtin_scenario("lq");
  const StagePolicy g = lq_gain(s);
  const Matrix pf = s.lq->P;
  const double level = 4.0 * s.lq->trace_PSigma / s.lq->decay_ratio;
  const A3Result a3 = check_a3(s, g, ExclusionSet::ellipsoid(pf, level));
  REQUIRE(a3.certificate.pass);
  CHECK(a3.b == doctest::Approx(s.lq->trace_PSigma).epsilon(1e-9));
  CHECK(check_a3(s, g, ExclusionSet::ellipsoid(pf, 2.0 * level)).certificate.pass);

  // T_g(z) = tr(P Sigma) - alpha z'(Q - K'RK) z for this cost.
  const NoiseExpectation e(s.noise);
  const double kk = s.lq->K_gain(0, 0);
  for (double z : {-3.0, 0.0, 1.7}) {
    const double expect = s.lq->trace_PSigma - s.alpha * z * z * (1.0 - kk * s.lq->R(0, 0) * kk);
    CHECK(a3_expression(s, g, scalar(z), e) == doctest::Approx(expect).epsilon(1e-10));
  }

  const HorizonSolution v = solve_value_function(s);
  std::vector<Vector> states;
  for (std::uint64_t i = 1; i <= 1000; ++i) states.push_back(scalar(12.0 * halton(i, 0) - 6.0));
  const DriftCertificate t1 = check_theorem1(s, v, a3.b, states);
  CHECK(t1.pass);
  CHECK(t1.test_points == 1000);
  CHECK(check_sandwich(s, v, a3.b, states).pass);

  const SandwichInfima inf = sandwich_infima(s);
  CHECK(inf.inf_stage == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(inf.inf_expected_terminal == doctest::Approx(s.lq->trace_PSigma).epsilon(1e-9));

  // c_s / c_F is bounded below by (1 - alpha) sigma_min(Q) / sigma_max(P).
  const double floor = (1.0 - s.alpha) * 1.0 / linalg::sigma_max(pf);
  for (double z = 0.5; z <= 50.0; z *= 1.3) CHECK(s.cost.separable->state(scalar(z)) / s.terminal_cost(scalar(z)) >= floor - 1e-12);
  const DriftCertificate gfc =
      check_geometric_from_costs(s, v, floor, ExclusionSet::ellipsoid(pf, level), a3.b, states);
  CHECK(gfc.pass);
}

TEST_CASE("exponential cost: c_s equals alpha c_F with alpha = 1 - lambda") {
  const Scenario s = builtin_scenario("integrator-exponential");
  REQUIRE(s.stabilizer.has_value());
  const double alpha = 1.0 - s.stabilizer->lambda_circ;
  for (double z = -12.0; z <= 12.0; z += 0.1) {
    const Vector x = scalar(z);
    CHECK(s.cost.separable->state(x) == doctest::Approx(alpha * s.terminal_cost(x)).epsilon(1e-15));
    CHECK(s.cost.separable->control(scalar(0.3)) == 0.0);
  }
  CHECK(radially_unbounded([](const Vector& z) { return std::exp(z.norm()); }, 1));
  CHECK(radially_unbounded([](const Vector& z) { return z.squaredNorm(); }, 2));
  CHECK_FALSE(radially_unbounded([](const Vector& z) { return z.norm() > 2.0 ? 1.0 : 0.0; }, 1));
}

TEST_CASE("indicator cost: geometric drift from costs fails for the stated reason") {
  const Scenario s = builtin_scenario("integrator-indicator");
  const HorizonSolution v = solve_value_function(s);
  const std::vector<Vector> states = interior_nodes(*v.table->grid, 3.0 * 0.6, 200);
  const DriftCertificate c = check_geometric_from_costs(s, v, 0.5, ExclusionSet::interval(-2.0, 2.0), 0.5, states);
  CHECK_FALSE(c.pass);
  CHECK(c.reason == "c_s not radially unbounded");
}

TEST_CASE("Monte Carlo certificates are reproducible for a fixed seed") {
  const OrthoStabilizer st =
      make_ortho_stabilizer(Matrix::Ones(1, 1), Matrix::Ones(1, 1), NoiseModel::gaussian(Vector::Zero(1), Matrix::Ones(1, 1)), 2.0);
  const NoiseModel noise = NoiseModel::gaussian(Vector::Zero(1), Matrix::Ones(1, 1), 5);
  auto v = [](const Vector& x) { return std::exp(x.norm()); };
  const ExclusionSet k = ExclusionSet::norm_ball(st.K_radius);
  const auto states = scalar_states(st.K_radius, 12.0, 20);
  const DriftCertificate a = check_geometric_drift(ortho_block_kernel(st, noise, 4000, 9), v, st.lambda_circ, k, states);
  const DriftCertificate b = check_geometric_drift(ortho_block_kernel(st, noise, 4000, 9), v, st.lambda_circ, k, states);
  CHECK(a.pass == b.pass);
  CHECK(a.worst_margin == b.worst_margin);
  CHECK(a.ci_halfwidth == b.ci_halfwidth);
  CHECK(a.ci_halfwidth > 0.0);
  CHECK(a.pass);
}

TEST_CASE("margin accumulator verdict") {
  MarginAccumulator acc(3.0);
  acc.add(scalar(1.0), -1.0, 0.2);
  acc.add(scalar(2.0), -0.5, 0.1);
  DriftCertificate c;
  acc.finish(c);
  CHECK(c.pass);
  CHECK(c.worst_margin + c.ci_halfwidth == doctest::Approx(-0.2));
  acc.add(scalar(3.0), -0.1, 0.1);
  acc.finish(c);
  CHECK_FALSE(c.pass);
  CHECK(c.worst_state(0) == 3.0);
}

TEST_CASE("interior nodes respect the boundary margin") {
  const Grid g = Grid::uniform(scalar(-6.0), scalar(6.0), {121});
  const auto nodes = interior_nodes(g, 3.0, 1000);
  CHECK(!nodes.empty());
  for (const auto& x : nodes) CHECK(std::abs(x(0)) <= 3.0 + 1e-12);
  CHECK(interior_nodes(g, 3.0, 10).size() <= 10);
}

TEST_CASE("certificate serialization") {
  DriftCertificate c;
  c.name = "demo";
  c.kind = DriftCertificate::Kind::geometric;
  c.pass = false;
  c.worst_margin = 0.25;
  c.reason = "margin, with comma";
  std::ostringstream csv, text;
  write_certificates_csv(csv, {c}, {"demo"});
  write_certificate_text(text, c, true);
  CHECK(csv.str().find("\"margin, with comma\"") != std::string::npos);
  CHECK(text.str().find("demo") != std::string::npos);
  CHECK(kind_name(DriftCertificate::Kind::theorem2) != kind_name(DriftCertificate::Kind::cesaro));
}
