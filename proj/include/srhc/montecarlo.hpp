#pragma once

#include "srhc/dpsolve.hpp"
#include "srhc/models.hpp"
#include "srhc/policy.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace srhc {

// Closed-loop paths stored path-major: entry (path, t) of a d-vector array
// starts at ((path * (T + 1)) + t) * d for states, (path * T + t) * m for controls.
struct TrajectoryEnsemble {
  std::string scenario;
  std::string policy;
  Vector x0;
  std::size_t n_paths = 0;
  int steps = 0;
  std::uint64_t seed = 0;
  Eigen::Index d = 0, m = 0, p = 0;
  std::vector<double> states;    // t = 0..T
  std::vector<double> controls;  // t = 0..T-1
  std::vector<double> noise;     // t = 0..T-1
  std::vector<double> costs;     // c(x_t, u_t), t = 0..T-1
  std::vector<char> flagged;     // path hit a non-finite state
  std::vector<int> flag_time;    // first non-finite step, -1 if none

  Eigen::Map<const Vector> state(std::size_t path, int t) const {
    return Eigen::Map<const Vector>(&states[(path * (steps + 1) + t) * d], d);
  }
  Eigen::Map<const Vector> control(std::size_t path, int t) const {
    return Eigen::Map<const Vector>(&controls[(path * steps + t) * m], m);
  }
  Eigen::Map<const Vector> noise_draw(std::size_t path, int t) const {
    return Eigen::Map<const Vector>(&noise[(path * steps + t) * p], p);
  }
  double cost(std::size_t path, int t) const { return costs[path * steps + t]; }
  std::size_t flagged_count() const;
};

// n independent paths of length T from x0; path i draws noise from a seed
// derived from (seed, noise seed, i), so results do not depend on threading.
TrajectoryEnsemble simulate(const Scenario& s, const ControlLaw& law, const Vector& x0, int steps, std::size_t n_paths,
                            std::uint64_t seed);

struct SequencePoint {
  int t = 0;
  double mean = 0.0;
  double std_error = 0.0;
};

struct LyapunovSequence {
  std::vector<SequencePoint> points;
  std::size_t excluded = 0;
  bool warning = false;  // more than 1% of paths excluded
};

LyapunovSequence expected_lyapunov_sequence(const TrajectoryEnsemble& e, const std::function<double(const Vector&)>& v);

struct TailRow {
  int t = 0;
  double r = 0.0;
  double p_hat = 0.0;
  double lo = 0.0;  // Wilson 95% interval
  double hi = 0.0;
  std::size_t count = 0;
  std::size_t n = 0;
};

// P(|x_t| > r) per requested time; `times` empty means every t.
std::vector<TailRow> tail_estimate(const TrajectoryEnsemble& e, const std::vector<double>& radii,
                                   const std::vector<int>& times = {});

// Exceedance frequencies pooled over t in [t_from, t_to] (t set to -1).
std::vector<TailRow> pooled_tail(const TrajectoryEnsemble& e, const std::vector<double>& radii, int t_from, int t_to);

// Least-squares slope of log p_hat against r over rows with at least
// `min_count` exceedances.
double tail_log_slope(const std::vector<TailRow>& rows, std::size_t min_count = 20);

// p * integral r^{p-1} P(|x_t| > r) dr by the trapezoid rule over all recorded norms at time t.
double tail_moment(const TrajectoryEnsemble& e, int t, double p);
double sample_moment(const TrajectoryEnsemble& e, int t, double p);

std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z = 1.959963984540054);

struct AverageCostEstimate {
  std::vector<double> running;  // A_k, k = 0..T-1
  double final = 0.0;
  double std_error = 0.0;
  double b = 0.0;
  bool pass = false;
  double last_quartile_drift = 0.0;
  bool non_stationary = false;
};

AverageCostEstimate average_cost(const TrajectoryEnsemble& e, double b);

struct CesaroResult {
  double slope = 0.0;
  double slope_se = 0.0;
  double max_mean = 0.0;
  bool bounded = false;
  bool pass = false;
};

CesaroResult check_cesaro_condition(const std::vector<SequencePoint>& seq,
                                    double cap = std::numeric_limits<double>::infinity());

struct Theorem2Row {
  int k = 0;
  double lhs = 0.0;        // E sum_{l<=k} c(x_l, u_l)
  double rhs = 0.0;        // V(x0) - E V(x_{k+1}) + sum_l E[E^{pi*}[T(x_{l+N}) | x_l]]
  double std_error = 0.0;  // of the paired difference lhs - rhs
  double allowance = 0.0;  // value_tolerance * sum_{l<=k} E|V(x_l)|
  bool pass = false;
  double t_sum = 0.0;      // sum_l E[E^{pi*}[T(x_{l+N}) | x_l]]
  double chain_gap = 0.0;  // t_sum - (k+1) b
  double chain_se = 0.0;
  bool chain_pass = false;
};

struct Theorem2Options {
  int k_max = 50;
  std::size_t outer_paths = 1000;
  std::size_t inner_paths = 100;
  std::uint64_t seed = 1;
  double b = 0.0;
  double ci_sigmas = 3.0;
  double abs_tol = 1e-9;
  // Relative accuracy of V; each telescoped step may be off by this fraction of V(x_l).
  double value_tolerance = 0.0;
};

// Nested simulation of the telescoped inequality. g_tilde defaults to the
// (A3) feedback g when the caller passes it.
std::vector<Theorem2Row> check_theorem2_inequality(const Scenario& s, const HorizonSolution& v,
                                                   const StagePolicy& g_tilde, const Vector& x0,
                                                   const Theorem2Options& options);

void write_sequence_csv(std::ostream& os, const std::vector<SequencePoint>& seq, const std::string& label);

}  // namespace srhc
