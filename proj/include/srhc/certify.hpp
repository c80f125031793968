#pragma once

#include "srhc/dpsolve.hpp"
#include "srhc/models.hpp"
#include "srhc/policy.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace srhc {

// The set K outside of which a drift inequality is required.
class ExclusionSet {
 public:
  enum class Kind { norm_ball, ellipsoid, interval };

  static ExclusionSet norm_ball(double radius);
  static ExclusionSet ellipsoid(const Matrix& p, double level);  // {x'Px <= level}
  static ExclusionSet interval(double lo, double hi);            // scalar states

  Kind kind() const { return kind_; }
  bool contains(const Vector& x) const;
  // Scaled distance: <= 1 exactly on K. Zero-size sets use an absolute scale of one.
  double gauge(const Vector& x) const;
  std::string describe() const;

  // Deterministic Halton states with gauge in (1, outer_gauge].
  std::vector<Vector> sample_outside(Eigen::Index d, std::size_t n, double outer_gauge) const;
  // Halton states with gauge in [0, 1], plus the center and boundary points.
  std::vector<Vector> sample_inside(Eigen::Index d, std::size_t n) const;

  double radius() const { return radius_; }
  double level() const { return level_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  Vector map_point(const Vector& direction, double g) const;

  Kind kind_ = Kind::norm_ball;
  double radius_ = 0.0;
  Matrix p_;
  Matrix p_inv_sqrt_;
  double level_ = 0.0;
  double lo_ = 0.0;
  double hi_ = 0.0;
};

// Unit directions from a Halton coordinate pair; d <= 3.
Vector halton_direction(Eigen::Index d, std::uint64_t index, unsigned first_coordinate);

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

// One-step (or one-block) transition x -> x1 with an estimator for E[h(x1) | x].
class TransitionKernel {
 public:
  using Step = std::function<Vector(const Vector& x, const Vector& w)>;
  using Sampler = std::function<Vector(const Vector& x, Rng& rng)>;

  static TransitionKernel quadrature(Step step, const NoiseModel& noise, int gauss_hermite_nodes = 0);
  static TransitionKernel monte_carlo(Sampler sampler, std::size_t samples, std::uint64_t seed);

  // `stream` selects the random stream for Monte Carlo kernels.
  Estimate expect(const Vector& x, const std::function<double(const Vector&)>& h, std::uint64_t stream = 0) const;

  bool exact() const { return exact_; }
  const std::string& method() const { return method_; }
  std::size_t samples() const { return samples_; }
  std::uint64_t seed() const { return seed_; }

 private:
  bool exact_ = true;
  std::string method_;
  Step step_;
  std::shared_ptr<NoiseExpectation> expectation_;
  std::shared_ptr<NoiseModel> noise_;
  Sampler sampler_;
  std::size_t samples_ = 0;
  std::uint64_t seed_ = 0;
};

// x -> f(x, g(x), w).
TransitionKernel closed_loop_kernel(const Scenario& s, const StagePolicy& g, int gauss_hermite_nodes = 0);
// One kappa-block of the bounded stabilizer, estimated by conditional Monte Carlo.
TransitionKernel ortho_block_kernel(const OrthoStabilizer& st, const NoiseModel& noise, std::size_t samples,
                                    std::uint64_t seed);

struct DriftCertificate {
  enum class Kind {
    geometric,
    constant,
    theorem1,
    sandwich,
    a3,
    geometric_from_costs,
    // Verdicts estimated from simulated ensembles.
    envelope,
    boundedness,
    tail,
    average_cost,
    cesaro,
    theorem2
  };

  std::string name;
  Kind kind = Kind::geometric;
  bool pass = false;
  std::size_t test_points = 0;
  std::size_t skipped = 0;
  double worst_margin = 0.0;
  double ci_halfwidth = 0.0;
  std::string method;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  Vector worst_state;
  std::map<std::string, double> constants;
  std::string reason;
  std::vector<std::string> notes;
};

std::string kind_name(DriftCertificate::Kind k);

struct CheckOptions {
  double abs_tol = 1e-6;     // quadrature checks: tolerance abs_tol * max(1, |rhs|)
  double ci_sigmas = 3.0;    // Monte Carlo checks: margin + ci_sigmas * stderr <= 0
  std::size_t inside_points = 400;
  std::size_t outside_points = 1000;
  double outer_gauge = 5.0;
};

// Aggregates per-state (margin, stderr) into a certificate; the verdict is
// pass iff worst_margin + ci_halfwidth <= 0.
class MarginAccumulator {
 public:
  explicit MarginAccumulator(double ci_sigmas) : ci_sigmas_(ci_sigmas) {}
  void add(const Vector& x, double margin, double std_error);
  void finish(DriftCertificate& c) const;
  std::size_t count() const { return count_; }

 private:
  double ci_sigmas_;
  std::size_t count_ = 0;
  bool any_ = false;
  double worst_total_ = 0.0;
  double worst_margin_ = 0.0;
  double worst_ci_ = 0.0;
  Vector worst_state_;
};

struct A3Result {
  DriftCertificate certificate;
  double b = 0.0;
};

// T_g(z) = c(z, g(z)) - c_F(z) + E[c_F(f(z, g(z), w))] by accurate noise quadrature.
double a3_expression(const Scenario& s, const StagePolicy& g, const Vector& z, const NoiseExpectation& e);

A3Result check_a3(const Scenario& s, const StagePolicy& g, const ExclusionSet& k, const CheckOptions& options = {});

DriftCertificate check_geometric_drift(const TransitionKernel& chain, const std::function<double(const Vector&)>& v,
                                       double lambda_circ, const ExclusionSet& k,
                                       const std::vector<Vector>& test_states, const CheckOptions& options = {},
                                       const std::vector<Vector>& inside_states = {});

DriftCertificate check_constant_drift(const TransitionKernel& chain, const std::function<double(const Vector&)>& v,
                                      double beta, const ExclusionSet& k, double epsilon, double m_bound,
                                      const std::vector<Vector>& test_states, const std::vector<Vector>& inside_states,
                                      const CheckOptions& options = {});

DriftCertificate check_theorem1(const Scenario& s, const HorizonSolution& v, double b,
                                const std::vector<Vector>& test_states, const CheckOptions& options = {});

struct SandwichInfima {
  double inf_stage = 0.0;
  double inf_expected_terminal = 0.0;
};

// Infima of c and of E[c_F o f] over the solver grid and control discretization.
SandwichInfima sandwich_infima(const Scenario& s);

DriftCertificate check_sandwich(const Scenario& s, const HorizonSolution& v, double b,
                                const std::vector<Vector>& test_states, const CheckOptions& options = {});

// Radial unboundedness along rays through the origin, radii 2^0 .. 2^6.
bool radially_unbounded(const std::function<double(const Vector&)>& f, Eigen::Index d);

DriftCertificate check_geometric_from_costs(const Scenario& s, const HorizonSolution& v, double alpha,
                                            const ExclusionSet& k, double b, const std::vector<Vector>& test_states,
                                            const CheckOptions& options = {});

// Test states of the solver grid whose distance to the grid boundary is at
// least `margin`; at most `max_points`, evenly strided.
std::vector<Vector> interior_nodes(const Grid& grid, double margin, std::size_t max_points);

// Drops states that are closer than `margin` to the box [lo, hi].
std::vector<Vector> within_box(const std::vector<Vector>& states, const Vector& lo, const Vector& hi, double margin);

void write_certificates_csv(std::ostream& os, const std::vector<DriftCertificate>& certs,
                            const std::vector<std::string>& expected_failures);
void write_certificate_text(std::ostream& os, const DriftCertificate& c, bool expected_failure);

}  // namespace srhc
