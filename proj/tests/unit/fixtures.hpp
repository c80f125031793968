#pragma once

#include "srhc/models.hpp"
#include "srhc/policy.hpp"
#include "srhc/scenario.hpp"

#include "json.hpp"

#include <cmath>
#include <string>

namespace fixtures {

using nlohmann::json;

inline srhc::Vector vec(std::initializer_list<double> xs) {
  srhc::Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline srhc::Vector scalar(double x) { return srhc::Vector::Constant(1, x); }

// Scalar x+ = a x + b u + w with quadratic cost; explicit R and P so nothing is synthesized.
inline json scalar_quadratic(double a, double b, double q, double r, double p, double alpha, double variance,
                             int horizon) {
  return json{{"name", "scalar-quadratic"},
              {"system", {{"kind", "linear-affine"}, {"A", {{a}}}, {"B", {{b}}}}},
              {"noise", {{"law", "gaussian"}, {"mean", {0.0}}, {"covariance", {{variance}}}, {"seed", 3}}},
              {"cost", {{"kind", "quadratic"}, {"params", {{"Q", {{q}}}, {"R", {{r}}}, {"P", {{p}}}, {"alpha", alpha}}}}},
              {"controls", {{"kind", "unconstrained"}}},
              {"horizon", horizon},
              {"solver",
               {{"grid_min", {-6.0}},
                {"grid_max", {6.0}},
                {"grid_points", 121},
                {"control_points", 241},
                {"mc_samples", 1000}}}};
}

// The enumerable toy: clamp(x + u + w, -2, 2), nodes -2..2, controls {-1, 0, 1},
// noise +-1 with equal weights, c = 0.5 x^2 + 0.5 u^2, c_F = x^2, N = 2.
inline json enumerable_toy() {
  return json{{"name", "toy"},
              {"system",
               {{"kind", "general"},
                {"map", "clamped-linear"},
                {"A", {{1.0}}},
                {"B", {{1.0}}},
                {"clamp_min", {-2.0}},
                {"clamp_max", {2.0}}}},
              {"noise", {{"law", "empirical"}, {"table", {{-1.0}, {1.0}}}}},
              {"cost", {{"kind", "quadratic"}, {"params", {{"Q", {{1.0}}}, {"R", {{1.0}}}, {"P", {{1.0}}}, {"alpha", 0.5}}}}},
              {"controls", {{"kind", "box"}, {"params", {{"lower", {-1.0}}, {"upper", {1.0}}}}}},
              {"horizon", 2},
              {"solver",
               {{"grid_min", {-2.0}}, {"grid_max", {2.0}}, {"grid_points", 5}, {"control_points", 3}, {"mc_samples", 10}}}};
}

// Integrator with the indicator cost and noise fixed at zero.
inline srhc::Scenario noiseless_integrator() {
  json c = srhc::builtin_config("integrator-indicator");
  c["noise"] = json{{"law", "empirical"}, {"table", {{0.0}}}};
  return srhc::build_scenario(c);
}

inline srhc::StagePolicy neg_sat(const srhc::Scenario& s) {
  return srhc::StagePolicy::analytic("-sat", 1, 1, [](const srhc::Vector& x) { return scalar(srhc::scalar_sat_policy(x(0))); },
                                     s.controls);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// E|m + sigma Z| for standard normal Z.
inline double folded_normal_mean(double m, double sigma) {
  return sigma * std::sqrt(2.0 / M_PI) * std::exp(-m * m / (2.0 * sigma * sigma)) + m * (1.0 - 2.0 * normal_cdf(-m / sigma));
}

}  // namespace fixtures
