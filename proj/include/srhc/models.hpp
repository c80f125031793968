#pragma once

#include "srhc/quadrature.hpp"
#include "srhc/riccati.hpp"
#include "srhc/rng.hpp"
#include "srhc/types.hpp"

#include "json.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace srhc {

using TransitionFn = std::function<Vector(const Vector& x, const Vector& u, const Vector& w)>;

struct SystemModel {
  enum class Kind { linear_affine, general };

  Eigen::Index state_dim = 0;
  Eigen::Index control_dim = 0;
  Eigen::Index noise_dim = 0;
  Kind kind = Kind::general;
  Matrix A;  // set for linear_affine and for linear-based general maps
  Matrix B;
  std::string map_name;
  TransitionFn transition;

  static SystemModel linear(const Matrix& a, const Matrix& b);
  // x+ = clamp(Ax + Bu + w, lo, hi) componentwise.
  static SystemModel clamped_linear(const Matrix& a, const Matrix& b, const Vector& lo, const Vector& hi);
  static SystemModel general(Eigen::Index d, Eigen::Index m, Eigen::Index p, TransitionFn f, std::string name);

  Vector step(const Vector& x, const Vector& u, const Vector& w) const;
};

class NoiseModel {
 public:
  enum class Law { gaussian, empirical };

  static NoiseModel gaussian(const Vector& mean, const Matrix& covariance, std::uint64_t seed = 0);
  static NoiseModel empirical(std::vector<Vector> table, std::uint64_t seed = 0);

  Law law() const { return law_; }
  Eigen::Index dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }
  const Vector& mean() const { return mean_; }
  const Matrix& covariance() const { return covariance_; }
  const std::vector<Vector>& table() const { return table_; }

  // Per-worker sampler: seeded from the model seed plus a stream index.
  Rng sampler(std::uint64_t stream) const { return make_rng(seed_, {stream}); }
  Vector sample(Rng& rng) const;

  // Gaussian: tensor Gauss-Hermite; empirical: the (possibly subsampled) table.
  ExpectationRule quadrature(int nodes_per_dim, std::size_t max_table_rows = 0) const;

  bool is_scalar_gaussian() const { return law_ == Law::gaussian && dim_ == 1; }

 private:
  Law law_ = Law::gaussian;
  Eigen::Index dim_ = 0;
  std::uint64_t seed_ = 0;
  Vector mean_;
  Matrix covariance_;
  Matrix factor_;
  std::vector<Vector> table_;
};

// Accurate noise expectation for verification work: adaptive quadrature for
// scalar Gaussians, tensor Gauss-Hermite otherwise, exact table averages for
// empirical laws.
class NoiseExpectation {
 public:
  explicit NoiseExpectation(const NoiseModel& noise, int gauss_hermite_nodes = 0);

  double operator()(const std::function<double(const Vector&)>& h) const;
  const std::string& method() const { return method_; }

 private:
  const NoiseModel* noise_;
  bool adaptive_ = false;
  ExpectationRule rule_;
  std::string method_;
};

struct CostSpec {
  using StageFn = std::function<double(const Vector& z, const Vector& v)>;
  using StateFn = std::function<double(const Vector& z)>;
  using ControlFn = std::function<double(const Vector& v)>;

  struct Separable {
    StateFn state;      // c_s
    ControlFn control;  // c_c
  };

  std::string kind;
  StageFn stage;
  StateFn terminal;
  std::optional<Separable> separable;
};

class ControlSet {
 public:
  enum class Kind { unconstrained, box, norm_ball };

  static ControlSet unconstrained(Eigen::Index m);
  static ControlSet box(const Vector& lower, const Vector& upper);
  static ControlSet norm_ball(Eigen::Index m, double radius);

  Kind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  double radius() const { return radius_; }

  bool contains(const Vector& u) const;
  Vector project(const Vector& u) const;
  bool contains_zero() const { return contains(Vector::Zero(dim_)); }

  // Control grid used by the DP solver. `lo`/`hi` bound the unconstrained
  // case. The zero control is always included; order is deterministic.
  std::vector<Vector> discretize(int points_per_dim, const Vector& lo, const Vector& hi) const;

 private:
  Kind kind_ = Kind::unconstrained;
  Eigen::Index dim_ = 0;
  Vector lower_, upper_;
  double radius_ = 0.0;
};

struct SolverHints {
  Vector grid_min;
  Vector grid_max;
  std::vector<int> grid_points;
  int control_points = 21;
  Vector control_min;  // empty: defaults to grid bounds for unconstrained sets
  Vector control_max;
  std::size_t mc_samples = 10000;
  int quadrature_nodes = 9;
  double dp_tolerance = 1e-3;  // relative tolerance for checks on DP values
  std::string expectation = "auto";  // auto | gauss-hermite
  Vector x0;                   // initial state for simulations
};

// Constants of the bounded-control stabilizer attached to exponential-cost
// scenarios.
struct StabilizerConstants {
  double u_max = 0.0;
  double rho_prop4 = 0.0;     // ln E[exp ||R(A,I) w||]
  double rho_example3 = 0.0;  // ln E[||R(A,I) w||]
  double rho_used = 0.0;
  double rho_ci_halfwidth = 0.0;
  double lambda_circ = 0.0;
  std::string rho_variant;
};

struct Scenario {
  std::string name;
  SystemModel system;
  NoiseModel noise;
  CostSpec cost;
  ControlSet controls;
  int horizon = 1;
  SolverHints solver;
  std::vector<std::string> expected_failures;
  std::optional<LqSynthesis> lq;
  std::optional<StabilizerConstants> stabilizer;
  double alpha = 0.0;        // quadratic cost mixing weight
  double half_width = 0.0;   // indicator cost interval
  nlohmann::json config;     // declarative source; round-trips through build_scenario

  double stage_cost(const Vector& x, const Vector& u) const;
  double terminal_cost(const Vector& x) const;
  Vector step(const Vector& x, const Vector& u, const Vector& w) const { return system.step(x, u, w); }
};

// Checks dimensions, then returns c(x, u).
double eval_stage_cost(const Scenario& s, const Vector& x, const Vector& u);

}  // namespace srhc
