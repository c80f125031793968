#include "srhc/dpsolve.hpp"

#include "srhc/linalg.hpp"
#include "srhc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace srhc {

namespace {

std::string format_state(const Vector& x) {
  std::ostringstream os;
  os << std::setprecision(10) << '(';
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x(i);
  os << ')';
  return os.str();
}

const double kInvSqrt2 = 0.70710678118654752440;
const double kInvSqrt2Pi = 0.39894228040143267794;

}  // namespace

double gaussian_expectation_of_interpolant(const Grid& grid, const std::vector<double>& values, double mean,
                                           double sigma) {
  if (grid.dim() != 1) throw DimensionError("interpolant expectation needs a one-dimensional grid");
  if (values.size() != grid.size()) throw DimensionError("value table size does not match grid");
  const auto& a = grid.axis(0);
  const std::size_t n = a.size();
  if (sigma == 0.0) {
    Vector y(1);
    y(0) = mean;
    return grid.interpolate(values, y);
  }
  // Phi and phi at the standardized nodes.
  auto cdf = [](double z) { return 0.5 * std::erfc(-z * kInvSqrt2); };
  auto pdf = [](double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); };
  double z_prev = (a[0] - mean) / sigma;
  double cdf_prev = cdf(z_prev), pdf_prev = pdf(z_prev);
  double acc = values[0] * cdf_prev;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double z = (a[k + 1] - mean) / sigma;
    const double c = cdf(z), p = pdf(z);
    const double slope = (values[k + 1] - values[k]) / (a[k + 1] - a[k]);
    const double at_mean = values[k] + slope * (mean - a[k]);
    acc += at_mean * (c - cdf_prev) + slope * sigma * (pdf_prev - p);
    cdf_prev = c;
    pdf_prev = p;
  }
  acc += values[n - 1] * 0.5 * std::erfc(((a[n - 1] - mean) / sigma) * kInvSqrt2);
  return acc;
}

bool uses_exact_interpolant_expectation(const Scenario& s) {
  return s.solver.expectation == "auto" && s.system.state_dim == 1 && s.system.kind == SystemModel::Kind::linear_affine &&
         s.noise.law() == NoiseModel::Law::gaussian && s.noise.dim() == 1;
}

std::vector<Vector> control_grid(const Scenario& s) {
  return s.controls.discretize(s.solver.control_points, s.solver.control_min, s.solver.control_max);
}

ExpectationRule dp_noise_rule(const Scenario& s, int nodes_per_dim) {
  const int n = nodes_per_dim > 0 ? nodes_per_dim : s.solver.quadrature_nodes;
  return s.noise.quadrature(n, s.solver.mc_samples);
}

Grid state_grid(const Scenario& s) { return Grid::uniform(s.solver.grid_min, s.solver.grid_max, s.solver.grid_points); }

BackupResult bellman_backup(const Scenario& s, const ValueMap& next, const Vector& x,
                            const std::vector<Vector>& controls, const ExpectationRule& rule) {
  if (controls.empty()) throw ValidationError("empty discretized control set");
  BackupResult best;
  best.value = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t i = 0; i < controls.size(); ++i) {
    const Vector& u = controls[i];
    const double e = rule.expect([&](const Vector& w) { return next(s.system.transition(x, u, w)); });
    const double v = s.cost.stage(x, u) + e;
    if (!found || v < best.value) {
      best.value = v;
      best.control = u;
      best.control_index = i;
      best.expectation = e;
      found = true;
    }
  }
  return best;
}

BackupResult bellman_backup(const Scenario& s, const ValueMap& next, const Vector& x) {
  require_dim(x, s.system.state_dim, "state");
  if ((x.array() < s.solver.grid_min.array()).any() || (x.array() > s.solver.grid_max.array()).any())
    throw ValidationError("bellman_backup: state " + format_state(x) + " lies outside the grid box");
  return bellman_backup(s, next, x, control_grid(s), dp_noise_rule(s));
}

namespace {

BackupResult exact_backup(const Scenario& s, const Grid& grid, const std::vector<double>& next_values, const Vector& x,
                          const std::vector<Vector>& controls, double noise_mean, double noise_sigma) {
  BackupResult best;
  bool found = false;
  const Vector zero = Vector::Zero(1);
  for (std::size_t i = 0; i < controls.size(); ++i) {
    const Vector& u = controls[i];
    const double m = s.system.transition(x, u, zero)(0) + noise_mean;
    const double e = gaussian_expectation_of_interpolant(grid, next_values, m, noise_sigma);
    const double v = s.cost.stage(x, u) + e;
    if (!found || v < best.value) {
      best.value = v;
      best.control = u;
      best.control_index = i;
      best.expectation = e;
      found = true;
    }
  }
  return best;
}

}  // namespace

ValueTable solve_horizon(const Scenario& s, const DpOptions& options) {
  ValueTable t;
  auto grid = std::make_shared<const Grid>(state_grid(s));
  t.grid = grid;
  t.horizon = s.horizon;
  t.control_set = control_grid(s);
  if (t.control_set.empty()) throw ValidationError("empty discretized control set");
  const ExpectationRule rule = dp_noise_rule(s);
  const bool gaussian = s.noise.law() == NoiseModel::Law::gaussian;
  const ExpectationRule fine = gaussian ? dp_noise_rule(s, 2 * s.solver.quadrature_nodes + 1) : rule;
  t.expectation_method = rule.label();
  t.quadrature_nodes = rule.size();

  const bool exact = uses_exact_interpolant_expectation(s);
  if (exact) {
    t.expectation_method = "exact-interpolant-gaussian";
    t.quadrature_nodes = 0;
  }
  const double noise_mean = s.noise.mean()(0);
  const double noise_sigma = std::sqrt(s.noise.covariance()(0, 0));

  const std::size_t n = grid->size();
  const int horizon = s.horizon;
  t.values.assign(horizon + 1, std::vector<double>(n));
  t.controls.assign(horizon, std::vector<Vector>(n));
  t.control_index.assign(horizon, std::vector<std::size_t>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double v = s.cost.terminal(grid->node(i));
    if (!std::isfinite(v)) throw NumericalError("non-finite terminal value at node " + std::to_string(i) + " " + format_state(grid->node(i)));
    t.values[horizon][i] = v;
  }

  std::vector<double> qerr(n, 0.0);
  for (int k = horizon - 1; k >= 0; --k) {
    const std::vector<double>& next_values = t.values[k + 1];
    const ValueMap next = [&](const Vector& y) { return grid->interpolate(next_values, y); };
    std::vector<double>& out = t.values[k];
    parallel_for(n, [&](std::size_t i) {
      const Vector x = grid->node(i);
      BackupResult r;
      if (exact) {
        r = exact_backup(s, *grid, next_values, x, t.control_set, noise_mean, noise_sigma);
      } else {
        r = bellman_backup(s, next, x, t.control_set, rule);
      }
      if (!std::isfinite(r.value))
        throw NumericalError("non-finite value at stage " + std::to_string(k) + ", node " + std::to_string(i) + " " +
                             format_state(x));
      out[i] = r.value;
      t.controls[k][i] = r.control;
      t.control_index[k][i] = r.control_index;
      if (gaussian && !exact && options.estimate_quadrature_error) {
        const double e2 = fine.expect([&](const Vector& w) { return next(s.system.transition(x, r.control, w)); });
        qerr[i] = std::max(qerr[i], std::abs(e2 - r.expectation) / std::max(std::abs(e2), 1e-300));
      }
    });
  }
  for (double e : qerr) {
    t.max_quadrature_error = std::max(t.max_quadrature_error, e);
    if (e > options.quadrature_flag) ++t.flagged_nodes;
  }
  return t;
}

PolicySequence stage_policies(const ValueTable& v, const ControlSet& controls) {
  std::vector<StagePolicy> stages;
  for (int k = 0; k < v.horizon; ++k) stages.push_back(StagePolicy::grid_table(v.grid, v.controls[k], controls));
  return PolicySequence(std::move(stages));
}

RecedingHorizonPolicy extract_rh_policy(const ValueTable& v, const ControlSet& controls) {
  if (v.horizon < 1 || v.controls.empty()) throw ValidationError("value table has no stage policies");
  return RecedingHorizonPolicy(StagePolicy::grid_table(v.grid, v.controls[0], controls), "dp-grid");
}

void write_value_table_csv(std::ostream& os, const ValueTable& v) {
  const Eigen::Index d = v.grid->dim();
  const Eigen::Index m = v.control_set.empty() ? 0 : v.control_set.front().size();
  os << "stage";
  for (Eigen::Index j = 0; j < d; ++j) os << ",x" << j;
  os << ",value";
  for (Eigen::Index j = 0; j < m; ++j) os << ",u" << j;
  os << "\r\n" << std::setprecision(17);
  for (int k = 0; k <= v.horizon; ++k) {
    for (std::size_t i = 0; i < v.grid->size(); ++i) {
      const Vector x = v.grid->node(i);
      os << k;
      for (Eigen::Index j = 0; j < d; ++j) os << ',' << x(j);
      os << ',' << v.values[k][i];
      for (Eigen::Index j = 0; j < m; ++j) {
        os << ',';
        if (k < v.horizon) os << v.controls[k][i](j);
      }
      os << "\r\n";
    }
  }
}

RecedingHorizonPolicy HorizonSolution::receding_horizon() const {
  if (stages.empty()) throw ValidationError("horizon solution has no stage policies");
  return RecedingHorizonPolicy(stages[0], source);
}

bool has_closed_form(const Scenario& s) {
  return s.cost.kind == "quadratic" && s.system.kind == SystemModel::Kind::linear_affine &&
         s.controls.kind() == ControlSet::Kind::unconstrained;
}

HorizonSolution solve_value_function(const Scenario& s, bool force_dp, const DpOptions& options) {
  HorizonSolution h;
  h.horizon = s.horizon;
  if (!force_dp && has_closed_form(s)) {
    // Recover the quadratic data from the cost closures at unit vectors.
    const Eigen::Index d = s.system.state_dim;
    const Eigen::Index m = s.system.control_dim;
    const Vector u0 = Vector::Zero(m);
    const Vector x0 = Vector::Zero(d);
    const Matrix qs = linalg::quadratic_form_matrix(d, [&](const Vector& z) { return s.cost.stage(z, u0); });
    const Matrix rs = linalg::quadratic_form_matrix(m, [&](const Vector& v) { return s.cost.stage(x0, v); });
    const Matrix pf = linalg::quadratic_form_matrix(d, [&](const Vector& z) { return s.cost.terminal(z); });
    FiniteHorizonLq lq = finite_horizon_lq_value(s.system.A, s.system.B, qs, rs, pf, s.noise.covariance(), s.horizon);
    const Vector mean = s.noise.mean();
    if (mean.cwiseAbs().maxCoeff() > 0.0) throw ValidationError("closed-form LQ value requires zero-mean noise");
    h.source = "riccati";
    h.value = lq.values[0];
    std::vector<StagePolicy> st;
    for (const auto& g : lq.gains) st.push_back(StagePolicy::linear_gain(g));
    h.stages = PolicySequence(std::move(st));
    h.lq = std::move(lq);
    h.tolerance = 1e-6;
    return h;
  }
  auto table = std::make_shared<const ValueTable>(solve_horizon(s, options));
  h.source = "dp";
  h.table = table;
  h.value = [table](const Vector& x) { return table->value(0, x); };
  h.stages = stage_policies(*table, s.controls);
  h.tolerance = s.solver.dp_tolerance;
  return h;
}

}  // namespace srhc
