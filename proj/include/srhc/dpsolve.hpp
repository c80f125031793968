#pragma once

#include "srhc/grid.hpp"
#include "srhc/models.hpp"
#include "srhc/policy.hpp"
#include "srhc/riccati.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace srhc {

struct BackupResult {
  double value = 0.0;
  Vector control;
  std::size_t control_index = 0;
  double expectation = 0.0;  // E[next_value(f(x, u*, w))]
};

using ValueMap = std::function<double(const Vector&)>;

// min over `controls` of c(x,u) + E[next(f(x,u,w))] with the given rule.
// Ties go to the lowest control index.
BackupResult bellman_backup(const Scenario& s, const ValueMap& next, const Vector& x,
                            const std::vector<Vector>& controls, const ExpectationRule& rule);

// Same, with the scenario's control discretization and noise rule. x must lie
// in the solver grid box.
BackupResult bellman_backup(const Scenario& s, const ValueMap& next, const Vector& x);

// E[L(mean + sigma Z)] for the clamped piecewise-linear interpolant L of
// `values` on a one-dimensional grid, Z standard normal. Exact up to rounding.
double gaussian_expectation_of_interpolant(const Grid& grid, const std::vector<double>& values, double mean,
                                           double sigma);

// True when the solver uses the closed-form interpolant expectation: scalar
// state, scalar Gaussian noise, linear-affine dynamics, solver.expectation auto.
bool uses_exact_interpolant_expectation(const Scenario& s);

std::vector<Vector> control_grid(const Scenario& s);
ExpectationRule dp_noise_rule(const Scenario& s, int nodes_per_dim = 0);
Grid state_grid(const Scenario& s);

struct ValueTable {
  std::shared_ptr<const Grid> grid;
  int horizon = 0;
  std::vector<std::vector<double>> values;             // values[k][node], k = 0..N
  std::vector<std::vector<Vector>> controls;           // controls[k][node], k = 0..N-1
  std::vector<std::vector<std::size_t>> control_index; // index into control_set
  std::vector<Vector> control_set;
  std::string expectation_method;
  std::size_t quadrature_nodes = 0;
  double max_quadrature_error = 0.0;  // relative, estimated by degree escalation
  std::size_t flagged_nodes = 0;      // nodes with relative error above 1e-4

  double value(int k, const Vector& x) const { return grid->interpolate(values.at(k), x); }
};

struct DpOptions {
  bool estimate_quadrature_error = true;
  double quadrature_flag = 1e-4;
};

ValueTable solve_horizon(const Scenario& s, const DpOptions& options = {});

RecedingHorizonPolicy extract_rh_policy(const ValueTable& v, const ControlSet& controls);
PolicySequence stage_policies(const ValueTable& v, const ControlSet& controls);

// stage, node coordinates, value, argmin control (blank at the terminal stage).
void write_value_table_csv(std::ostream& os, const ValueTable& v);

// V_N* together with the optimal stage policies pi_0*..pi_{N-1}*, from either
// the Riccati closed form or the grid solver.
struct HorizonSolution {
  std::string source;  // "riccati" or "dp"
  int horizon = 0;
  ValueMap value;      // V_N*
  PolicySequence stages;
  std::shared_ptr<const ValueTable> table;
  std::optional<FiniteHorizonLq> lq;
  double tolerance = 1e-6;  // relative error budget for inequality checks

  RecedingHorizonPolicy receding_horizon() const;
};

// Closed form when the scenario is an unconstrained linear-quadratic problem
// (unless force_dp), grid DP otherwise.
HorizonSolution solve_value_function(const Scenario& s, bool force_dp = false, const DpOptions& options = {});

bool has_closed_form(const Scenario& s);

}  // namespace srhc
