#include "srhc/scenario.hpp"

#include "srhc/linalg.hpp"
#include "srhc/policy.hpp"
#include "srhc/riccati.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace srhc {

using nlohmann::json;

namespace {

const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ParseError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError((path.empty() ? key : path + "." + key) + ": missing required field");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError(path + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ParseError(path + ": expected a finite number");
  return v;
}

long long integer(const json& j, const std::string& path) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) throw ParseError(path + ": expected an integer");
  return j.get<long long>();
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) throw ParseError(path + ": expected a string");
  return j.get<std::string>();
}

Vector vector_of(const json& j, const std::string& path) {
  if (j.is_number()) return Vector::Constant(1, number(j, path));
  if (!j.is_array() || j.empty()) throw ParseError(path + ": expected a non-empty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

// Vector of length d, accepting a scalar shorthand.
Vector vector_dim(const json& j, Eigen::Index d, const std::string& path) {
  if (j.is_number()) return Vector::Constant(d, number(j, path));
  Vector v = vector_of(j, path);
  if (v.size() != d) throw DimensionError(path + ": expected length " + std::to_string(d));
  return v;
}

Matrix matrix_of(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ParseError(path + ": expected an array of arrays of numbers");
  const std::size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty()) throw ParseError(path + "[0]: expected an array of numbers");
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array()) throw ParseError(rp + ": expected an array of numbers");
    if (j[r].size() != cols) throw DimensionError(path + ": rows have different lengths");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(j[r][c], rp + "[" + std::to_string(c) + "]");
  }
  return m;
}

SystemModel parse_system(const json& j) {
  const std::string kind = text(field(j, "kind", "system"), "system.kind");
  const Matrix a = matrix_of(field(j, "A", "system"), "system.A");
  const Matrix b = matrix_of(field(j, "B", "system"), "system.B");
  if (a.rows() != a.cols()) throw DimensionError("system.A must be square");
  if (b.rows() != a.rows()) throw DimensionError("system.B must have as many rows as system.A");
  if (kind == "linear-affine") return SystemModel::linear(a, b);
  if (kind == "general") {
    const std::string map = text(field(j, "map", "system"), "system.map");
    if (map == "linear-affine") {
      SystemModel s = SystemModel::linear(a, b);
      s.kind = SystemModel::Kind::general;
      return s;
    }
    if (map == "clamped-linear") {
      const Vector lo = vector_dim(field(j, "clamp_min", "system"), a.rows(), "system.clamp_min");
      const Vector hi = vector_dim(field(j, "clamp_max", "system"), a.rows(), "system.clamp_max");
      return SystemModel::clamped_linear(a, b, lo, hi);
    }
    throw ParseError("system.map: unknown map '" + map + "' (expected linear-affine or clamped-linear)");
  }
  throw ParseError("system.kind: unknown kind '" + kind + "' (expected linear-affine or general)");
}

std::vector<Vector> table_from_generator(const json& g) {
  const std::string kind = text(field(g, "kind", "noise.table_generator"), "noise.table_generator.kind");
  if (kind != "uniform-midpoints")
    throw ParseError("noise.table_generator.kind: unknown generator '" + kind + "' (expected uniform-midpoints)");
  const double lo = number(field(g, "low", "noise.table_generator"), "noise.table_generator.low");
  const double hi = number(field(g, "high", "noise.table_generator"), "noise.table_generator.high");
  const long long n = integer(field(g, "count", "noise.table_generator"), "noise.table_generator.count");
  if (n < 1 || !(hi > lo)) throw ValidationError("noise.table_generator: need count >= 1 and high > low");
  std::vector<Vector> rows;
  rows.reserve(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) rows.push_back(Vector::Constant(1, lo + (hi - lo) * (i + 0.5) / static_cast<double>(n)));
  return rows;
}

NoiseModel parse_noise(const json& j) {
  const std::string law = text(field(j, "law", "noise"), "noise.law");
  std::uint64_t seed = 0;
  if (j.contains("seed")) seed = static_cast<std::uint64_t>(integer(j["seed"], "noise.seed"));
  if (law == "gaussian") {
    const Vector mean = vector_of(field(j, "mean", "noise"), "noise.mean");
    const Matrix cov = matrix_of(field(j, "covariance", "noise"), "noise.covariance");
    return NoiseModel::gaussian(mean, cov, seed);
  }
  if (law == "empirical") {
    std::vector<Vector> rows;
    if (j.contains("table")) {
      const json& t = j["table"];
      if (!t.is_array() || t.empty()) throw ParseError("noise.table: expected a non-empty array of rows");
      for (std::size_t i = 0; i < t.size(); ++i) rows.push_back(vector_of(t[i], "noise.table[" + std::to_string(i) + "]"));
    } else if (j.contains("table_generator")) {
      rows = table_from_generator(j["table_generator"]);
    } else {
      throw ParseError("noise.table: missing required field (or noise.table_generator)");
    }
    return NoiseModel::empirical(std::move(rows), seed);
  }
  throw ParseError("noise.law: unknown law '" + law + "' (expected gaussian or empirical)");
}

ControlSet parse_controls(const json& j, Eigen::Index m) {
  const std::string kind = text(field(j, "kind", "controls"), "controls.kind");
  const json params = j.contains("params") ? j["params"] : json::object();
  if (kind == "unconstrained") return ControlSet::unconstrained(m);
  if (kind == "box") {
    const Vector lo = vector_dim(field(params, "lower", "controls.params"), m, "controls.params.lower");
    const Vector hi = vector_dim(field(params, "upper", "controls.params"), m, "controls.params.upper");
    return ControlSet::box(lo, hi);
  }
  if (kind == "norm-ball") return ControlSet::norm_ball(m, number(field(params, "radius", "controls.params"), "controls.params.radius"));
  throw ParseError("controls.kind: unknown kind '" + kind + "' (expected unconstrained, box or norm-ball)");
}

SolverHints parse_solver(const json& j, Eigen::Index d, Eigen::Index m) {
  SolverHints h;
  h.grid_min = vector_dim(field(j, "grid_min", "solver"), d, "solver.grid_min");
  h.grid_max = vector_dim(field(j, "grid_max", "solver"), d, "solver.grid_max");
  const json& gp = field(j, "grid_points", "solver");
  if (gp.is_array()) {
    if (static_cast<Eigen::Index>(gp.size()) != d) throw DimensionError("solver.grid_points: expected length " + std::to_string(d));
    for (std::size_t i = 0; i < gp.size(); ++i) h.grid_points.push_back(static_cast<int>(integer(gp[i], "solver.grid_points")));
  } else {
    h.grid_points.assign(static_cast<std::size_t>(d), static_cast<int>(integer(gp, "solver.grid_points")));
  }
  for (int n : h.grid_points)
    if (n < 2) throw ValidationError("solver.grid_points: need at least 2 points per axis");
  if ((h.grid_max.array() <= h.grid_min.array()).any()) throw ValidationError("solver.grid_max must exceed solver.grid_min");
  h.control_points = static_cast<int>(integer(field(j, "control_points", "solver"), "solver.control_points"));
  if (h.control_points < 1) throw ValidationError("solver.control_points must be positive");
  const long long mc = integer(field(j, "mc_samples", "solver"), "solver.mc_samples");
  if (mc < 1) throw ValidationError("solver.mc_samples must be positive");
  h.mc_samples = static_cast<std::size_t>(mc);
  if (j.contains("control_min")) h.control_min = vector_dim(j["control_min"], m, "solver.control_min");
  if (j.contains("control_max")) h.control_max = vector_dim(j["control_max"], m, "solver.control_max");
  if (j.contains("quadrature_nodes")) h.quadrature_nodes = static_cast<int>(integer(j["quadrature_nodes"], "solver.quadrature_nodes"));
  if (h.quadrature_nodes < 1) throw ValidationError("solver.quadrature_nodes must be positive");
  if (j.contains("dp_tolerance")) h.dp_tolerance = number(j["dp_tolerance"], "solver.dp_tolerance");
  if (j.contains("expectation")) {
    h.expectation = text(j["expectation"], "solver.expectation");
    if (h.expectation != "auto" && h.expectation != "gauss-hermite")
      throw ParseError("solver.expectation: expected auto or gauss-hermite");
  }
  h.x0 = j.contains("x0") ? vector_dim(j["x0"], d, "solver.x0") : Vector::Zero(d);
  return h;
}

void parse_cost(Scenario& s, const json& j) {
  const std::string kind = text(field(j, "kind", "cost"), "cost.kind");
  const json params = j.contains("params") ? j["params"] : json::object();
  const Eigen::Index d = s.system.state_dim;
  const Eigen::Index m = s.system.control_dim;
  CostSpec c;
  c.kind = kind;
  if (kind == "quadratic") {
    const Matrix q = matrix_of(field(params, "Q", "cost.params"), "cost.params.Q");
    if (q.rows() != d || q.cols() != d) throw DimensionError("cost.params.Q must be " + std::to_string(d) + "x" + std::to_string(d));
    s.alpha = params.contains("alpha") ? number(params["alpha"], "cost.params.alpha") : 0.5;
    if (s.alpha < 0.0 || s.alpha > 1.0) throw ValidationError("cost.params.alpha must lie in [0, 1]");
    Matrix r, p;
    if (!params.contains("R") || !params.contains("P")) {
      if (s.system.kind != SystemModel::Kind::linear_affine)
        throw ValidationError("cost.params: R and P can only be synthesized for linear-affine systems");
      s.lq = synthesize_lq(s.system.A, s.system.B, q, s.noise.covariance());
      r = s.lq->R;
      p = s.lq->P;
    }
    if (params.contains("R")) r = matrix_of(params["R"], "cost.params.R");
    if (params.contains("P")) p = matrix_of(params["P"], "cost.params.P");
    if (r.rows() != m || r.cols() != m) throw DimensionError("cost.params.R must be " + std::to_string(m) + "x" + std::to_string(m));
    if (p.rows() != d || p.cols() != d) throw DimensionError("cost.params.P must be " + std::to_string(d) + "x" + std::to_string(d));
    for (const auto& [name, mat] : std::vector<std::pair<const char*, const Matrix*>>{{"Q", &q}, {"R", &r}, {"P", &p}})
      if (!linalg::is_symmetric(*mat, 1e-9) || !linalg::is_psd(*mat, 1e-10))
        throw ValidationError(std::string("cost.params.") + name + " must be symmetric positive semidefinite");
    const double a = s.alpha;
    c.stage = [q, r, a](const Vector& z, const Vector& v) { return (1.0 - a) * z.dot(q * z) + a * v.dot(r * v); };
    c.terminal = [p](const Vector& z) { return z.dot(p * z); };
    c.separable = CostSpec::Separable{[q, a](const Vector& z) { return (1.0 - a) * z.dot(q * z); },
                                      [r, a](const Vector& v) { return a * v.dot(r * v); }};
  } else if (kind == "indicator") {
    s.half_width = params.contains("half_width") ? number(params["half_width"], "cost.params.half_width") : 2.0;
    if (!(s.half_width > 0.0)) throw ValidationError("cost.params.half_width must be positive");
    const double hw = s.half_width;
    c.stage = [hw](const Vector& z, const Vector&) { return z.norm() > hw ? 1.0 : 0.0; };
    c.terminal = [](const Vector& z) { return z.norm(); };
    c.separable = CostSpec::Separable{[hw](const Vector& z) { return z.norm() > hw ? 1.0 : 0.0; },
                                      [](const Vector&) { return 0.0; }};
  } else if (kind == "exponential") {
    if (s.system.kind != SystemModel::Kind::linear_affine)
      throw ValidationError("cost.kind exponential requires a linear-affine system");
    const double u_max = params.contains("u_max") ? number(params["u_max"], "cost.params.u_max") : 2.0;
    const std::string variant = params.contains("rho") ? text(params["rho"], "cost.params.rho") : "prop4";
    if (variant != "prop4" && variant != "example3")
      throw ParseError("cost.params.rho: expected prop4 or example3");
    OrthoStabilizer st = make_ortho_stabilizer(s.system.A, s.system.B, s.noise, u_max);
    StabilizerConstants k;
    k.u_max = u_max;
    k.rho_prop4 = st.rho;
    k.rho_example3 = st.rho_example3;
    k.rho_variant = variant;
    k.rho_used = variant == "prop4" ? st.rho : st.rho_example3;
    k.rho_ci_halfwidth = st.rho_ci_halfwidth;
    k.lambda_circ = std::exp(k.rho_used - u_max);
    s.stabilizer = k;
    const double lam = k.lambda_circ;
    c.stage = [lam](const Vector& z, const Vector&) { return (1.0 - lam) * std::exp(z.norm()); };
    c.terminal = [](const Vector& z) { return std::exp(z.norm()); };
    c.separable = CostSpec::Separable{[lam](const Vector& z) { return (1.0 - lam) * std::exp(z.norm()); },
                                      [](const Vector&) { return 0.0; }};
  } else {
    throw ParseError("cost.kind: unknown kind '" + kind + "' (expected quadratic, indicator or exponential)");
  }
  s.cost = std::move(c);
}

void check_nonnegative_costs(const Scenario& s) {
  const Eigen::Index d = s.system.state_dim;
  const Eigen::Index m = s.system.control_dim;
  const Vector lo = s.solver.grid_min;
  const Vector hi = s.solver.grid_max;
  for (std::uint64_t i = 1; i <= 64; ++i) {
    Vector x(d), u(m);
    for (Eigen::Index j = 0; j < d; ++j) x(j) = lo(j) + (hi(j) - lo(j)) * halton(i, static_cast<unsigned>(j));
    for (Eigen::Index j = 0; j < m; ++j) u(j) = 2.0 * halton(i, static_cast<unsigned>(d + j)) - 1.0;
    u = s.controls.project(u);
    const double c = s.cost.stage(x, u);
    const double cf = s.cost.terminal(x);
    if (!(c >= 0.0) || !(cf >= 0.0)) throw ValidationError("cost functions must be nonnegative");
  }
}

}  // namespace

Scenario build_scenario(const json& config) {
  if (!config.is_object()) throw ParseError("scenario: expected a JSON object");
  Scenario s;
  s.name = text(field(config, "name", ""), "name");
  if (s.name.empty()) throw ParseError("name: must not be empty");
  s.system = parse_system(field(config, "system", ""));
  s.noise = parse_noise(field(config, "noise", ""));
  if (s.noise.dim() != s.system.noise_dim)
    throw DimensionError("noise dimension " + std::to_string(s.noise.dim()) + " does not match system noise dimension " +
                         std::to_string(s.system.noise_dim));
  s.controls = parse_controls(field(config, "controls", ""), s.system.control_dim);
  const long long n = integer(field(config, "horizon", ""), "horizon");
  if (n < 1) throw ValidationError("horizon must be a positive integer");
  s.horizon = static_cast<int>(n);
  s.solver = parse_solver(field(config, "solver", ""), s.system.state_dim, s.system.control_dim);
  if (s.controls.kind() == ControlSet::Kind::unconstrained) {
    if (s.solver.control_min.size() == 0) s.solver.control_min = Vector::Constant(s.system.control_dim, s.solver.grid_min.minCoeff());
    if (s.solver.control_max.size() == 0) s.solver.control_max = Vector::Constant(s.system.control_dim, s.solver.grid_max.maxCoeff());
  }
  parse_cost(s, field(config, "cost", ""));
  if (config.contains("expected_failures")) {
    const json& ef = config["expected_failures"];
    if (!ef.is_array()) throw ParseError("expected_failures: expected an array of strings");
    for (std::size_t i = 0; i < ef.size(); ++i) s.expected_failures.push_back(text(ef[i], "expected_failures[" + std::to_string(i) + "]"));
  }
  check_nonnegative_costs(s);
  s.config = config;
  return s;
}

Scenario parse_scenario(const std::string& text_doc) {
  json j;
  try {
    j = json::parse(text_doc);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario document is not valid JSON: ") + e.what());
  }
  return build_scenario(j);
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::vector<std::string> builtin_names() { return {"lq", "integrator-indicator", "integrator-exponential", "ortho-rotation"}; }

json builtin_config(const std::string& name) {
  if (name == "lq") {
    return json{{"name", "lq"},
                {"system", {{"kind", "linear-affine"}, {"A", {{1.0}}}, {"B", {{1.0}}}}},
                {"noise", {{"law", "gaussian"}, {"mean", {0.0}}, {"covariance", {{1.0}}}, {"seed", 11}}},
                {"cost", {{"kind", "quadratic"}, {"params", {{"Q", {{1.0}}}, {"alpha", 0.5}}}}},
                {"controls", {{"kind", "unconstrained"}}},
                {"horizon", 3},
                {"solver",
                 {{"grid_min", {-6.0}},
                  {"grid_max", {6.0}},
                  {"grid_points", 401},
                  {"control_points", 801},
                  {"control_min", {-6.0}},
                  {"control_max", {6.0}},
                  {"mc_samples", 10000},
                  {"quadrature_nodes", 9},
                  {"dp_tolerance", 1e-3},
                  {"x0", {5.0}}}}};
  }
  if (name == "integrator-indicator") {
    return json{{"name", "integrator-indicator"},
                {"system", {{"kind", "linear-affine"}, {"A", {{1.0}}}, {"B", {{1.0}}}}},
                {"noise",
                 {{"law", "empirical"},
                  {"table_generator", {{"kind", "uniform-midpoints"}, {"low", -1.0}, {"high", 1.0}, {"count", 64}}},
                  {"seed", 12}}},
                {"cost", {{"kind", "indicator"}, {"params", {{"half_width", 2.0}}}}},
                {"controls", {{"kind", "box"}, {"params", {{"lower", {-1.0}}, {"upper", {1.0}}}}}},
                {"horizon", 3},
                {"solver",
                 {{"grid_min", {-12.0}},
                  {"grid_max", {12.0}},
                  {"grid_points", 481},
                  {"control_points", 41},
                  {"mc_samples", 10000},
                  {"quadrature_nodes", 9},
                  {"dp_tolerance", 1e-3},
                  {"x0", {10.0}}}},
                {"expected_failures", {"geometric_from_costs"}}};
  }
  if (name == "integrator-exponential") {
    return json{{"name", "integrator-exponential"},
                {"system", {{"kind", "linear-affine"}, {"A", {{1.0}}}, {"B", {{1.0}}}}},
                {"noise", {{"law", "gaussian"}, {"mean", {0.0}}, {"covariance", {{1.0}}}, {"seed", 13}}},
                {"cost", {{"kind", "exponential"}, {"params", {{"u_max", 2.0}, {"rho", "prop4"}}}}},
                {"controls", {{"kind", "box"}, {"params", {{"lower", {-2.0}}, {"upper", {2.0}}}}}},
                {"horizon", 3},
                {"solver",
                 {{"grid_min", {-8.0}},
                  {"grid_max", {8.0}},
                  {"grid_points", 401},
                  {"control_points", 41},
                  {"mc_samples", 10000},
                  {"quadrature_nodes", 9},
                  {"dp_tolerance", 1e-3},
                  {"x0", {0.0}}}}};
  }
  if (name == "ortho-rotation") {
    const double c = std::cos(std::numbers::pi / 4.0);
    const double sn = std::sin(std::numbers::pi / 4.0);
    return json{{"name", "ortho-rotation"},
                {"system", {{"kind", "linear-affine"}, {"A", {{c, -sn}, {sn, c}}}, {"B", {{1.0, 0.0}, {0.0, 1.0}}}}},
                {"noise", {{"law", "gaussian"}, {"mean", {0.0, 0.0}}, {"covariance", {{1.0, 0.0}, {0.0, 1.0}}}, {"seed", 14}}},
                {"cost", {{"kind", "exponential"}, {"params", {{"u_max", 2.0}, {"rho", "prop4"}}}}},
                {"controls", {{"kind", "norm-ball"}, {"params", {{"radius", 2.0}}}}},
                {"horizon", 2},
                {"solver",
                 {{"grid_min", {-8.0, -8.0}},
                  {"grid_max", {8.0, 8.0}},
                  {"grid_points", 41},
                  {"control_points", 17},
                  {"mc_samples", 2000},
                  {"quadrature_nodes", 9},
                  {"dp_tolerance", 1e-2},
                  {"x0", {4.0, 0.0}}}}};
  }
  std::string names;
  for (const auto& n : builtin_names()) names += (names.empty() ? "" : ", ") + n;
  throw NotFoundError("unknown scenario '" + name + "'; valid names: " + names);
}

Scenario builtin_scenario(const std::string& name) { return build_scenario(builtin_config(name)); }

const json& scenario_to_json(const Scenario& s) { return s.config; }

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ParseError("override '" + assignment + "': expected key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  if (key == "N") {
    config["horizon"] = value;
    return;
  }
  if (key == "alpha") {
    config["cost"]["params"]["alpha"] = value;
    return;
  }
  if (key == "U_max") {
    config["cost"]["params"]["u_max"] = value;
    json& ctl = config["controls"];
    const std::string kind = ctl.value("kind", "");
    if (kind == "norm-ball") ctl["params"]["radius"] = value;
    if (kind == "box" && value.is_number()) {
      const double u = value.get<double>();
      const std::size_t m = ctl["params"]["lower"].is_array() ? ctl["params"]["lower"].size() : 1;
      ctl["params"]["lower"] = std::vector<double>(m, -u);
      ctl["params"]["upper"] = std::vector<double>(m, u);
    }
    return;
  }
  if (key == "grid_points") {
    config["solver"]["grid_points"] = value;
    return;
  }
  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ParseError("override '" + assignment + "': empty path segment");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    if (!node->is_object()) throw ParseError("override '" + assignment + "': '" + part + "' is not an object");
    node = &(*node)[part];
    start = dot + 1;
  }
}

json resolve_scenario_config(const std::string& name_or_path, const std::vector<std::string>& overrides) {
  json config;
  bool builtin = false;
  for (const auto& n : builtin_names()) builtin = builtin || n == name_or_path;
  if (builtin) {
    config = builtin_config(name_or_path);
  } else {
    std::ifstream in(name_or_path);
    if (!in) {
      std::string names;
      for (const auto& n : builtin_names()) names += (names.empty() ? "" : ", ") + n;
      throw NotFoundError("unknown scenario '" + name_or_path + "' (not a builtin and no such file); valid names: " + names);
    }
    try {
      config = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ParseError("scenario file '" + name_or_path + "' is not valid JSON: " + e.what());
    }
  }
  for (const auto& o : overrides) apply_override(config, o);
  return config;
}

}  // namespace srhc
