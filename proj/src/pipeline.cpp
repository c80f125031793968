#include "srhc/pipeline.hpp"

#include "srhc/dpsolve.hpp"
#include "srhc/linalg.hpp"
#include "srhc/montecarlo.hpp"
#include "srhc/parallel.hpp"
#include "srhc/report.hpp"
#include "srhc/rng.hpp"
#include "srhc/scenario.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

namespace srhc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stage prerequisites; certify and simulate need pi_0* and the (A3) data.
const std::map<std::string, std::vector<std::string>>& stage_dependencies() {
  static const std::map<std::string, std::vector<std::string>> deps = {
      {"synth", {}},
      {"solve", {}},
      {"certify", {"synth", "solve"}},
      {"simulate", {"synth", "solve"}},
      {"perf", {"synth", "solve", "certify", "simulate"}},
  };
  return deps;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

struct SynthRow {
  std::string key;
  double value;
};

void add_matrix_rows(std::vector<SynthRow>& rows, const std::string& name, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      rows.push_back({name + "[" + std::to_string(i) + "," + std::to_string(j) + "]", m(i, j)});
}

std::vector<double> thin(const std::vector<double>& v, std::size_t stride) {
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); i += stride) out.push_back(v[i]);
  if (!v.empty() && (v.size() - 1) % stride != 0) out.push_back(v.back());
  return out;
}

double noise_scale(const NoiseModel& noise) {
  return std::sqrt(std::max(0.0, linalg::max_eigenvalue(noise.covariance())));
}

class Run {
 public:
  explicit Run(const RunManifest& m) : m_(m) {}

  Artifacts execute();

 private:
  void load();
  void synth();
  void solve();
  void certify();
  void simulate();
  void perf();
  void finish(Artifacts& out);

  std::vector<Vector> theorem1_states() const;
  void add_certificate(DriftCertificate c) { certs_.push_back(std::move(c)); }

  const RunManifest& m_;
  nlohmann::json config_;
  std::optional<Scenario> s_;
  std::vector<std::string> stages_;

  // synth
  std::vector<SynthRow> synth_rows_;
  std::vector<std::string> synth_notes_;
  std::optional<StagePolicy> g_;          // (A3) feedback, stationary
  std::optional<ExclusionSet> k_;         // (A3) exclusion set
  std::optional<ControlLaw> g_law_;       // law simulated for the drift envelope
  std::optional<OrthoStabilizer> stab_;
  std::function<double(const Vector&)> lyap_;  // Lyapunov function of the g closed loop
  std::string lyap_label_;
  double lambda_circ_ = kNaN;
  double envelope_beta_ = kNaN;
  double gfc_alpha_ = kNaN;
  double jump_bound_ = kNaN;

  // solve
  std::optional<HorizonSolution> sol_;

  // certify
  std::optional<double> b_;
  std::vector<DriftCertificate> certs_;

  // simulate
  std::optional<TrajectoryEnsemble> pi_ens_, g_ens_;
  LyapunovSequence vn_seq_, g_seq_;
  std::vector<double> envelope_;
  std::vector<TailRow> pi_tail_, g_tail_;

  // perf
  std::optional<AverageCostEstimate> avg_;
  std::optional<CesaroResult> cesaro_;
  std::vector<Theorem2Row> thm2_;

  std::ostringstream report_;
};

void Run::load() {
  config_ = resolve_scenario_config(m_.scenario, m_.overrides);
  s_ = build_scenario(config_);
}

void Run::synth() {
  const Scenario& s = *s_;
  const Eigen::Index d = s.system.state_dim;
  const std::string& kind = s.cost.kind;
  if (kind == "quadratic") {
    if (s.system.kind != SystemModel::Kind::linear_affine)
      throw ValidationError("quadratic synthesis requires linear-affine dynamics");
    const Matrix& a = s.system.A;
    const Matrix& bm = s.system.B;
    const Eigen::Index mdim = s.system.control_dim;
    const Matrix qs = linalg::quadratic_form_matrix(d, [&](const Vector& z) { return s.cost.stage(z, Vector::Zero(mdim)); });
    const Matrix rs = linalg::quadratic_form_matrix(mdim, [&](const Vector& v) { return s.cost.stage(Vector::Zero(d), v); });
    const Matrix pf = linalg::quadratic_form_matrix(d, [&](const Vector& z) { return s.cost.terminal(z); });
    LqSynthesis lq;
    if (s.lq) {
      lq = *s.lq;
    } else {
      const Matrix q = s.alpha < 1.0 ? Matrix(qs / (1.0 - s.alpha)) : Matrix(Matrix::Identity(d, d));
      lq = synthesize_lq(a, bm, q, s.noise.covariance());
      synth_notes_.push_back("terminal weight given explicitly; the drift envelope uses the synthesized P");
    }
    const Matrix acl = a + bm * lq.K_gain;
    add_matrix_rows(synth_rows_, "K", lq.K_gain);
    add_matrix_rows(synth_rows_, "P", lq.P);
    add_matrix_rows(synth_rows_, "R", lq.R);
    synth_rows_.push_back({"lambda_circ", lq.lambda_circ});
    synth_rows_.push_back({"lambda_circ_literal", lq.lambda_circ_literal});
    synth_rows_.push_back({"decay_ratio", lq.decay_ratio});
    synth_rows_.push_back({"beta", lq.beta});
    synth_rows_.push_back({"K_set_level", lq.K_set_level});
    synth_rows_.push_back({"trace_P_Sigma", lq.trace_PSigma});
    synth_rows_.push_back({"lyapunov_residual", lq.lyapunov_residual});
    synth_rows_.push_back({"riccati_residual", lq.riccati_residual});
    synth_rows_.push_back({"r_max", lq.r_max});
    synth_rows_.push_back({"riccati_iterations", static_cast<double>(lq.riccati_iterations)});

    g_ = StagePolicy::linear_gain(lq.K_gain, s.controls);
    g_law_ = ControlLaw::stationary(*g_, "g(x) = Kx");
    const Matrix p = lq.P;
    lyap_ = [p](const Vector& x) { return x.dot(p * x); };
    lyap_label_ = "x'Px";
    lambda_circ_ = lq.lambda_circ;
    envelope_beta_ = lq.beta;

    // T_g(z) = tr(Pf Sigma) - z'Mz, so (A3-ii) holds outside {z'Pf z <= tr / lambda_min(M, Pf)}.
    const Matrix mm = linalg::symmetrize(pf - qs - lq.K_gain.transpose() * rs * lq.K_gain - acl.transpose() * pf * acl);
    const double tr = (pf * s.noise.covariance()).trace();
    if (linalg::min_eigenvalue(pf) <= 0.0) throw ValidationError("terminal weight is not positive definite");
    const double lmin = linalg::generalized_min_eigenvalue(mm, pf);
    synth_rows_.push_back({"a3_margin_eigenvalue", lmin});
    if (lmin > 0.0) {
      k_ = ExclusionSet::ellipsoid(pf, tr / lmin);
      synth_rows_.push_back({"a3_K_level", tr / lmin});
    } else {
      synth_notes_.push_back("c + E[c_F o f] - c_F is not negative definite under g; no (A3) set");
    }
    gfc_alpha_ = (1.0 - s.alpha) * lq.decay_ratio;
  } else if (kind == "exponential") {
    const StabilizerConstants& k = *s.stabilizer;
    OrthoStabilizer st = make_ortho_stabilizer(s.system.A, s.system.B, s.noise, k.u_max);
    st.rho = k.rho_used;
    st.lambda_circ = k.lambda_circ;
    st.K_radius = std::max(0.0, 2.0 * k.rho_used);
    synth_rows_.push_back({"u_max", k.u_max});
    synth_rows_.push_back({"kappa", static_cast<double>(st.kappa)});
    synth_rows_.push_back({"rho_prop4", k.rho_prop4});
    synth_rows_.push_back({"rho_example3", k.rho_example3});
    synth_rows_.push_back({"rho_used", k.rho_used});
    synth_rows_.push_back({"rho_ci_halfwidth", k.rho_ci_halfwidth});
    synth_rows_.push_back({"lambda_circ", k.lambda_circ});
    synth_rows_.push_back({"K_radius", st.K_radius});
    synth_notes_.push_back("rho variant " + k.rho_variant + ", computed by " + st.rho_method);
    lyap_ = [](const Vector& x) { return std::exp(x.norm()); };
    lyap_label_ = "exp(|x|)";
    lambda_circ_ = k.lambda_circ;
    gfc_alpha_ = 1.0 - k.lambda_circ;
    k_ = ExclusionSet::norm_ball(st.K_radius);
    g_law_ = ControlLaw::ortho(st);
    if (st.kappa == 1) {
      g_ = StagePolicy::analytic(
          "bounded-stabilizer", d, s.system.control_dim,
          [st](const Vector& x) { return ortho_control_block(st, x)[0]; }, s.controls);
    } else {
      synth_notes_.push_back("controls act in blocks of " + std::to_string(st.kappa) +
                             " steps; no stationary (A3) feedback");
    }
    // sup over K of E[V(x_kappa)] for the drift envelope.
    const auto inside = k_->sample_inside(d, 100);
    const bool exact = st.kappa == 1 && d == 1;
    const TransitionKernel chain = exact ? closed_loop_kernel(s, *g_)
                                         : ortho_block_kernel(st, s.noise, 20000, derive_seed(m_.seed, {0xB7A}));
    std::vector<double> hi(inside.size());
    parallel_for(inside.size(), [&](std::size_t i) {
      const Estimate e = chain.expect(inside[i], lyap_, i);
      hi[i] = e.mean + 3.0 * e.std_error;
    });
    envelope_beta_ = *std::max_element(hi.begin(), hi.end());
    synth_rows_.push_back({"envelope_beta", envelope_beta_});
    stab_ = st;
  } else if (kind == "indicator") {
    const double hw = config_["cost"].value("params", nlohmann::json::object()).value("half_width", 2.0);
    if (s.system.control_dim != d) throw ValidationError("indicator synthesis needs control_dim == state_dim");
    g_ = StagePolicy::analytic(
        "saturated-negation", d, d, [s](const Vector& x) { return s.controls.project(-x); }, s.controls);
    k_ = d == 1 ? ExclusionSet::interval(-hw, hw) : ExclusionSet::norm_ball(hw);
    double u_bound = 0.0;
    for (const auto& u : control_grid(s)) u_bound = std::max(u_bound, u.norm());
    const NoiseExpectation e(s.noise);
    jump_bound_ = e([u_bound](const Vector& w) { return std::pow(u_bound + w.norm(), 4.0); });
    synth_rows_.push_back({"half_width", hw});
    synth_rows_.push_back({"control_bound", u_bound});
    synth_rows_.push_back({"epsilon", 2.0});
    synth_rows_.push_back({"jump_moment_M", jump_bound_});
    gfc_alpha_ = s.alpha > 0.0 ? s.alpha : 0.5;
  } else {
    throw ValidationError("no synthesis for cost kind '" + kind + "'");
  }
}

void Run::solve() {
  sol_ = solve_value_function(*s_);
  if (sol_->table && sol_->table->flagged_nodes > 0)
    report_ << "warning: " << sol_->table->flagged_nodes << " value-table nodes exceed the quadrature error flag\n";
}

std::vector<Vector> Run::theorem1_states() const {
  const Scenario& s = *s_;
  if (sol_->table) return interior_nodes(*sol_->table->grid, 3.0 * noise_scale(s.noise), 1000);
  // Closed form: Halton points over the solver box.
  const Eigen::Index d = s.system.state_dim;
  std::vector<Vector> out;
  for (std::uint64_t i = 1; i <= 1000; ++i) {
    Vector x(d);
    for (Eigen::Index j = 0; j < d; ++j)
      x(j) = s.solver.grid_min(j) + (s.solver.grid_max(j) - s.solver.grid_min(j)) * halton(i, static_cast<unsigned>(j));
    out.push_back(x);
  }
  return out;
}

void Run::certify() {
  const Scenario& s = *s_;
  const Eigen::Index d = s.system.state_dim;
  const CheckOptions opts;
  if (g_ && k_) {
    A3Result a3 = check_a3(s, *g_, *k_, opts);
    b_ = a3.b;
    add_certificate(std::move(a3.certificate));
  }
  if (lyap_ && s.cost.kind == "quadratic") {
    // Geometric drift of x'Px outside {x'Px <= level}.
    const double level = [&] {
      for (const auto& r : synth_rows_)
        if (r.key == "K_set_level") return r.value;
      return kNaN;
    }();
    const Matrix p = linalg::quadratic_form_matrix(d, lyap_);
    const ExclusionSet kd = ExclusionSet::ellipsoid(p, level);
    const TransitionKernel chain = closed_loop_kernel(s, *g_);
    DriftCertificate c = check_geometric_drift(chain, lyap_, lambda_circ_, kd, kd.sample_outside(d, 1000, 5.0), opts,
                                               kd.sample_inside(d, 100));
    c.constants["beta"] = envelope_beta_;
    add_certificate(std::move(c));
  } else if (stab_) {
    const OrthoStabilizer& st = *stab_;
    if (st.kappa == 1 && d == 1) {
      const TransitionKernel chain = closed_loop_kernel(s, *g_);
      add_certificate(check_geometric_drift(chain, lyap_, lambda_circ_, *k_, k_->sample_outside(d, 1000, 5.0), opts,
                                            k_->sample_inside(d, 100)));
    } else {
      const std::uint64_t seed = derive_seed(m_.seed, {0xD41F7});
      const TransitionKernel chain = ortho_block_kernel(st, s.noise, 20000, seed);
      DriftCertificate c = check_geometric_drift(chain, lyap_, lambda_circ_, *k_, k_->sample_outside(d, 200, 5.0),
                                                 opts, k_->sample_inside(d, 50));
      c.name = "block_drift";
      c.seed = seed;
      add_certificate(std::move(c));
    }
  } else if (s.cost.kind == "indicator") {
    const TransitionKernel chain = closed_loop_kernel(s, *g_);
    add_certificate(check_constant_drift(
        chain, [](const Vector& x) { return x.norm(); }, 1.0, *k_, 2.0, jump_bound_,
        k_->sample_outside(d, 1000, 5.0), k_->sample_inside(d, 100), opts));
  }

  const std::vector<Vector> states = theorem1_states();
  if (b_) {
    add_certificate(check_theorem1(s, *sol_, *b_, states, opts));
    add_certificate(check_sandwich(s, *sol_, *b_, states, opts));
    add_certificate(check_geometric_from_costs(s, *sol_, gfc_alpha_, *k_, *b_, states, opts));
  } else {
    for (const char* name : {"theorem1", "sandwich", "geometric_from_costs"}) {
      DriftCertificate c;
      c.name = name;
      c.kind = std::string(name) == "theorem1"  ? DriftCertificate::Kind::theorem1
               : std::string(name) == "sandwich" ? DriftCertificate::Kind::sandwich
                                                 : DriftCertificate::Kind::geometric_from_costs;
      c.method = "none";
      c.reason = "no (A3) constant b for this scenario";
      add_certificate(std::move(c));
    }
  }
}

void Run::simulate() {
  const Scenario& s = *s_;
  const Vector x0 = s.solver.x0;
  const int steps = m_.steps;
  pi_ens_ = srhc::simulate(s, ControlLaw::stationary(sol_->receding_horizon()), x0, steps, m_.paths,
                           derive_seed(m_.seed, {1}));
  vn_seq_ = expected_lyapunov_sequence(*pi_ens_, sol_->value);

  std::vector<double> radii;
  for (int i = 1; i <= 160; ++i) radii.push_back(0.25 * i);
  const int from = steps / 10;
  pi_tail_ = pooled_tail(*pi_ens_, radii, from, steps);

  if (!g_law_ || !lyap_ || s.cost.kind == "indicator") return;
  g_ens_ = srhc::simulate(s, *g_law_, x0, steps, m_.paths, derive_seed(m_.seed, {2}));
  g_seq_ = expected_lyapunov_sequence(*g_ens_, lyap_);
  g_tail_ = pooled_tail(*g_ens_, radii, from, steps);

  // Drift envelope lambda^j V(x0) + beta / (1 - lambda) at block boundaries t = j kappa.
  const int kappa = g_law_->block_length();
  const double v0 = lyap_(x0);
  envelope_.assign(g_seq_.points.size(), kNaN);
  // One-sided: the mean may not exceed the envelope by more than 3 stderr.
  MarginAccumulator env(3.0);
  for (const auto& p : g_seq_.points) {
    if (p.t % kappa != 0) continue;
    const double bound = std::pow(lambda_circ_, p.t / kappa) * v0 + envelope_beta_ / (1.0 - lambda_circ_);
    envelope_[p.t] = bound;
    Vector t(1);
    t(0) = p.t;
    env.add(t, p.mean - bound - 3.0 * p.std_error, 0.0);
  }
  DriftCertificate c;
  c.name = "prop1_envelope";
  c.kind = DriftCertificate::Kind::envelope;
  const std::string mc_method = "monte-carlo(" + std::to_string(m_.paths) + " paths)";
  c.method = mc_method;
  c.samples = m_.paths;
  c.seed = g_ens_->seed;
  env.finish(c);
  c.constants["lambda_circ"] = lambda_circ_;
  c.constants["beta"] = envelope_beta_;
  c.constants["V_x0"] = v0;
  c.constants["flagged_paths"] = static_cast<double>(g_ens_->flagged_count());
  c.notes.push_back("E[" + lyap_label_ + "] under " + g_law_->name() + " checked at " + std::to_string(c.test_points) +
                    " times; margin = mean - envelope - 3 stderr; worst state column holds t");
  if (g_seq_.warning) c.notes.push_back("more than 1% of paths flagged non-finite");
  add_certificate(std::move(c));

  if (s.cost.kind != "exponential") return;

  // Boundedness: max over t <= T against V(x0) and twice the median over [T/10, T].
  std::vector<double> late;
  double mx = -std::numeric_limits<double>::infinity(), mx_se = 0.0;
  int mx_t = 0;
  for (const auto& p : g_seq_.points) {
    if (p.t >= from) late.push_back(p.mean);
    if (p.mean > mx) mx = p.mean, mx_se = p.std_error, mx_t = p.t;
  }
  std::nth_element(late.begin(), late.begin() + late.size() / 2, late.end());
  double median = late[late.size() / 2];
  if (late.size() % 2 == 0) {
    const double lower = *std::max_element(late.begin(), late.begin() + late.size() / 2);
    median = 0.5 * (median + lower);
  }
  DriftCertificate bc;
  bc.name = "boundedness";
  bc.kind = DriftCertificate::Kind::boundedness;
  bc.method = mc_method;
  bc.samples = m_.paths;
  bc.seed = g_ens_->seed;
  bc.test_points = g_seq_.points.size();
  const double cap = std::max(v0, 2.0 * median);
  bc.worst_margin = mx - cap - 3.0 * mx_se;
  bc.pass = bc.worst_margin <= 0.0;
  bc.worst_state = Vector::Constant(1, mx_t);
  bc.constants["max_mean"] = mx;
  bc.constants["median_late"] = median;
  bc.constants["argmax_t"] = mx_t;
  bc.constants["V_x0"] = v0;
  bc.notes.push_back("pass iff max_t E[exp|x_t|] <= max(V(x0), 2 median over t in [" + std::to_string(from) + ", " +
                     std::to_string(steps) + "]) + 3 stderr");
  add_certificate(std::move(bc));

  const double slope = tail_log_slope(g_tail_, 20);
  DriftCertificate tc;
  tc.name = "tail_slope";
  tc.kind = DriftCertificate::Kind::tail;
  tc.method = "pooled exceedance frequencies, t in [" + std::to_string(from) + ", " + std::to_string(steps) + "]";
  tc.samples = m_.paths;
  tc.seed = g_ens_->seed;
  std::size_t used = 0;
  for (const auto& r : g_tail_)
    if (r.count >= 20) ++used;
  tc.test_points = used;
  tc.worst_margin = slope + 0.8;
  tc.pass = std::isfinite(slope) && slope <= -0.8;
  tc.constants["log_slope"] = slope;
  tc.constants["limit"] = -0.8;
  tc.notes.push_back("least-squares slope of log P(|x_t| > r) over radii with at least 20 exceedances");
  add_certificate(std::move(tc));
}

void Run::perf() {
  const Scenario& s = *s_;
  if (!b_) throw ValidationError("performance checks need the (A3) constant b");
  avg_ = average_cost(*pi_ens_, *b_);
  DriftCertificate ac;
  ac.name = "average_cost";
  ac.kind = DriftCertificate::Kind::average_cost;
  ac.method = "monte-carlo(" + std::to_string(m_.paths) + " paths, T = " + std::to_string(m_.steps) + ")";
  ac.samples = m_.paths;
  ac.seed = pi_ens_->seed;
  ac.test_points = 1;
  ac.worst_margin = avg_->final - 3.0 * avg_->std_error - *b_;
  ac.pass = avg_->pass;
  ac.constants["A_T"] = avg_->final;
  ac.constants["std_error"] = avg_->std_error;
  ac.constants["b"] = *b_;
  ac.constants["last_quartile_drift"] = avg_->last_quartile_drift;
  ac.notes.push_back("pass iff A_T - 3 stderr <= b");
  if (avg_->non_stationary) ac.notes.push_back("Cesaro mean still drifting over the last quartile (non-stationary flag)");
  add_certificate(std::move(ac));

  cesaro_ = check_cesaro_condition(vn_seq_.points);
  DriftCertificate cc;
  cc.name = "cesaro";
  cc.kind = DriftCertificate::Kind::cesaro;
  cc.method = "least squares over the last half";
  cc.samples = m_.paths;
  cc.seed = pi_ens_->seed;
  cc.test_points = vn_seq_.points.size() / 2;
  cc.worst_margin = std::abs(cesaro_->slope) - 3.0 * cesaro_->slope_se;
  cc.ci_halfwidth = 0.0;
  cc.pass = cesaro_->pass;
  cc.constants["slope"] = cesaro_->slope;
  cc.constants["slope_se"] = cesaro_->slope_se;
  cc.constants["max_mean"] = cesaro_->max_mean;
  add_certificate(std::move(cc));

  DriftCertificate tc;
  tc.name = "theorem2";
  tc.kind = DriftCertificate::Kind::theorem2;
  DriftCertificate chain;
  chain.name = "theorem2_chain";
  chain.kind = DriftCertificate::Kind::theorem2;
  if (!g_) {
    tc.method = chain.method = "none";
    tc.reason = chain.reason = "no stationary (A3) feedback to use as g~";
    add_certificate(std::move(tc));
    add_certificate(std::move(chain));
    return;
  }
  Theorem2Options o;
  o.k_max = m_.theorem2_k_max;
  o.outer_paths = m_.paths;
  o.inner_paths = m_.theorem2_inner;
  o.seed = derive_seed(m_.seed, {3});
  o.b = *b_;
  o.value_tolerance = sol_->source == "dp" ? sol_->tolerance : 0.0;
  thm2_ = check_theorem2_inequality(s, *sol_, *g_, s.solver.x0, o);
  MarginAccumulator acc(o.ci_sigmas), cacc(o.ci_sigmas);
  for (const auto& r : thm2_) {
    Vector k(1);
    k(0) = r.k;
    acc.add(k, r.lhs - r.rhs - o.ci_sigmas * r.std_error - o.abs_tol * std::max(1.0, std::abs(r.rhs)) - r.allowance,
            0.0);
    cacc.add(k, r.chain_gap - o.ci_sigmas * r.chain_se, 0.0);
  }
  const std::string method = "nested monte-carlo(" + std::to_string(o.outer_paths) + " x " +
                             std::to_string(o.inner_paths) + ")";
  tc.method = chain.method = method;
  tc.samples = chain.samples = o.outer_paths;
  tc.seed = chain.seed = o.seed;
  acc.finish(tc);
  cacc.finish(chain);
  tc.constants["k_max"] = o.k_max;
  tc.constants["b"] = o.b;
  tc.constants["value_tolerance"] = o.value_tolerance;
  tc.constants["allowance_k_max"] = thm2_.back().allowance;
  chain.constants["b"] = o.b;
  tc.notes.push_back("margin = LHS - RHS - 3 stderr of the paired difference - value_tolerance * sum E|V_N*(x_l)|; g~ = g; "
                     "worst state column holds k");
  chain.notes.push_back("margin = sum of E[T_g(x_{l+N})] - (k+1) b - 3 stderr");
  add_certificate(std::move(tc));
  add_certificate(std::move(chain));
}

std::string synthesis_csv(const std::vector<SynthRow>& rows) {
  std::ostringstream os;
  os << "quantity,value\r\n";
  for (const auto& r : rows) os << csv_field(r.key) << ',' << fmt(r.value) << "\r\n";
  return os.str();
}

void Run::finish(Artifacts& out) {
  const Scenario& s = *s_;
  auto& files = out.files;
  RunResult& res = out.result;
  res.stages_run = stages_;
  res.expected_failures = s.expected_failures;
  res.certificates = certs_;
  for (const auto& c : certs_) {
    const bool expected = std::find(s.expected_failures.begin(), s.expected_failures.end(), c.name) !=
                          s.expected_failures.end();
    if (!c.pass && !expected) res.all_pass = false;
  }

  nlohmann::json man;
  man["scenario"] = m_.scenario;
  man["stages_requested"] = m_.stages;
  man["stages_run"] = stages_;
  man["seed"] = m_.seed;
  man["overrides"] = m_.overrides;
  man["paths"] = m_.paths;
  man["steps"] = m_.steps;
  man["theorem2_k_max"] = m_.theorem2_k_max;
  man["theorem2_inner"] = m_.theorem2_inner;
  man["scenario_config"] = config_;
  files["manifest.json"] = man.dump(2) + "\n";

  std::ostringstream rep;
  rep << "scenario " << s.name << " (from " << m_.scenario << ")\n";
  rep << "seed " << m_.seed << "; stages";
  for (const auto& st : stages_) rep << ' ' << st;
  rep << "\nstate_dim " << s.system.state_dim << ", control_dim " << s.system.control_dim << ", horizon N = "
      << s.horizon << ", cost " << s.cost.kind << "\n";
  rep << report_.str();

  if (!synth_rows_.empty() || !synth_notes_.empty()) {
    files["synthesis.csv"] = synthesis_csv(synth_rows_);
    rep << "\n[synthesis]\n";
    for (const auto& r : synth_rows_) rep << "  " << r.key << " = " << fmt(r.value) << "\n";
    for (const auto& n : synth_notes_) rep << "  note: " << n << "\n";
  }

  if (sol_) {
    rep << "\n[value function]\n  source " << sol_->source << ", V_N*(x0) = " << fmt(sol_->value(s.solver.x0)) << "\n";
    if (sol_->table) {
      std::ostringstream vt;
      write_value_table_csv(vt, *sol_->table);
      files["value_table.csv"] = vt.str();
      rep << "  grid nodes " << sol_->table->grid->size() << ", expectation " << sol_->table->expectation_method
          << ", max estimated quadrature error " << fmt(sol_->table->max_quadrature_error) << ", flagged nodes "
          << sol_->table->flagged_nodes << "\n";
    }
  }

  if (!certs_.empty()) {
    std::ostringstream cs;
    write_certificates_csv(cs, certs_, s.expected_failures);
    files["certificates.csv"] = cs.str();
    rep << "\n[certificates]\n";
    for (const auto& c : certs_) {
      const bool expected = std::find(s.expected_failures.begin(), s.expected_failures.end(), c.name) !=
                            s.expected_failures.end();
      write_certificate_text(rep, c, expected);
    }
  }

  if (pi_ens_) {
    const int steps = pi_ens_->steps;
    std::ostringstream es;
    es << "t,pi_hat_VN_mean,pi_hat_VN_stderr,pi_hat_cesaro_mean,g_V_mean,g_V_stderr,g_envelope\r\n";
    for (int t = 0; t <= steps; ++t) {
      es << t << ',' << fmt(vn_seq_.points[t].mean) << ',' << fmt(vn_seq_.points[t].std_error) << ',';
      if (avg_ && t < static_cast<int>(avg_->running.size())) es << fmt(avg_->running[t]);
      es << ',';
      if (g_ens_) es << fmt(g_seq_.points[t].mean) << ',' << fmt(g_seq_.points[t].std_error);
      else es << ',';
      es << ',';
      if (g_ens_ && std::isfinite(envelope_[t])) es << fmt(envelope_[t]);
      es << "\r\n";
    }
    files["ensemble_summary.csv"] = es.str();

    std::ostringstream ts;
    ts << "policy,r,p_hat,wilson_lo,wilson_hi,count,n\r\n";
    auto tail_rows = [&](const std::string& label, const std::vector<TailRow>& rows) {
      for (const auto& r : rows)
        ts << label << ',' << fmt(r.r) << ',' << fmt(r.p_hat) << ',' << fmt(r.lo) << ',' << fmt(r.hi) << ','
           << r.count << ',' << r.n << "\r\n";
    };
    tail_rows("pi_hat", pi_tail_);
    if (g_ens_) tail_rows("g", g_tail_);
    files["tails.csv"] = ts.str();

    const std::size_t stride = std::max<std::size_t>(1, static_cast<std::size_t>(steps + 1) / 1000);
    std::vector<double> tx, vy;
    for (const auto& p : vn_seq_.points) tx.push_back(p.t), vy.push_back(p.mean);
    {
      std::ostringstream svg;
      write_svg_chart(svg, {"Value function along the receding-horizon closed loop", "t", "E[V_N*(x_t)] under π̂", false},
                      {{"E[V_N*(x_t)]", thin(tx, stride), thin(vy, stride)}});
      files["lyapunov_pi_hat.svg"] = svg.str();
    }
    if (g_ens_) {
      std::vector<double> gy, ex, ey;
      for (const auto& p : g_seq_.points) gy.push_back(p.mean);
      for (std::size_t t = 0; t < envelope_.size(); ++t)
        if (std::isfinite(envelope_[t])) ex.push_back(static_cast<double>(t)), ey.push_back(envelope_[t]);
      std::ostringstream svg;
      write_svg_chart(svg, {"Drift envelope under the synthesized feedback", "t", "E[" + lyap_label_ + "] under g", true},
                      {{"E[V(x_t)]", thin(tx, stride), thin(gy, stride)},
                       {"envelope", thin(ex, stride), thin(ey, stride)}});
      files["lyapunov_g.svg"] = svg.str();
    }
    {
      std::vector<double> rx, py, gx, gp;
      for (const auto& r : pi_tail_)
        if (r.p_hat > 0) rx.push_back(r.r), py.push_back(r.p_hat);
      for (const auto& r : g_tail_)
        if (r.p_hat > 0) gx.push_back(r.r), gp.push_back(r.p_hat);
      std::vector<Series> series{{"under π̂", rx, py}};
      if (g_ens_) series.push_back({"under g", gx, gp});
      std::ostringstream svg;
      write_svg_chart(svg, {"Tail frequencies, t in [T/10, T]", "r", "P(|x_t| > r)", true}, series);
      files["tails.svg"] = svg.str();
    }
    rep << "\n[simulation]\n  " << pi_ens_->n_paths << " paths, T = " << steps << ", x0 = ";
    for (Eigen::Index i = 0; i < s.solver.x0.size(); ++i) rep << (i ? "," : "") << fmt(s.solver.x0(i));
    rep << "\n  E[V_N*(x_T)] under pi_hat = " << fmt(vn_seq_.points.back().mean) << " +- "
        << fmt(vn_seq_.points.back().std_error) << ", flagged paths " << pi_ens_->flagged_count() << "\n";
    if (g_ens_)
      rep << "  E[V(x_T)] with V(x) = " << lyap_label_ << " under " << g_law_->name() << " = " << fmt(g_seq_.points.back().mean)
          << " +- " << fmt(g_seq_.points.back().std_error) << ", flagged paths " << g_ens_->flagged_count() << "\n";
  }

  if (avg_) {
    std::vector<double> kx, ay, bx, by;
    for (std::size_t k = 0; k < avg_->running.size(); ++k) kx.push_back(static_cast<double>(k)), ay.push_back(avg_->running[k]);
    bx = {0.0, static_cast<double>(avg_->running.size() - 1)};
    by = {avg_->b, avg_->b};
    const std::size_t stride = std::max<std::size_t>(1, avg_->running.size() / 1000);
    std::ostringstream svg;
    write_svg_chart(svg, {"Long-run average cost under the receding-horizon policy", "k",
                          "Cesàro mean of c(x_t, u_t) under π̂", false},
                    {{"A_k", thin(kx, stride), thin(ay, stride)}, {"b", bx, by}});
    files["cesaro.svg"] = svg.str();
    rep << "\n[performance]\n  A_T = " << fmt(avg_->final) << " +- " << fmt(avg_->std_error) << " (b = " << fmt(avg_->b)
        << ")\n  Cesaro slope " << fmt(cesaro_->slope) << " +- " << fmt(cesaro_->slope_se) << "\n";
  }
  if (!thm2_.empty()) {
    std::ostringstream t2;
    t2 << "k,lhs,rhs,std_error,allowance,verdict,t_sum,chain_gap,chain_stderr,chain_verdict\r\n";
    for (const auto& r : thm2_)
      t2 << r.k << ',' << fmt(r.lhs) << ',' << fmt(r.rhs) << ',' << fmt(r.std_error) << ',' << fmt(r.allowance) << ','
         << (r.pass ? "pass" : "fail") << ',' << fmt(r.t_sum) << ',' << fmt(r.chain_gap) << ',' << fmt(r.chain_se)
         << ',' << (r.chain_pass ? "pass" : "fail") << "\r\n";
    files["theorem2.csv"] = t2.str();
    rep << "  theorem 2 inequality (k: lhs <= rhs):\n";
    for (const auto& r : thm2_)
      if (r.k % 10 == 0 || r.k == static_cast<int>(thm2_.size()) - 1)
        rep << "    k = " << r.k << ": " << fmt(r.lhs) << " <= " << fmt(r.rhs) << " (stderr " << fmt(r.std_error)
            << ") " << (r.pass ? "pass" : "fail") << "\n";
  }

  rep << "\nverdict: " << (res.all_pass ? "PASS" : "FAIL") << " (" << certs_.size() << " certificates";
  if (!s.expected_failures.empty()) {
    rep << "; expected failures:";
    for (const auto& e : s.expected_failures) rep << ' ' << e;
  }
  rep << ")\n";
  files["report.txt"] = rep.str();
}

Artifacts Run::execute() {
  stages_ = close_stage_list(m_.stages);
  auto guarded = [&](const std::string& stage, auto&& fn) {
    try {
      fn();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(stage, e.what());
    }
  };
  try {
    load();
  } catch (const NotFoundError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("load", e.what());
  }
  for (const auto& st : stages_) {
    if (st == "synth") guarded(st, [&] { synth(); });
    else if (st == "solve") guarded(st, [&] { solve(); });
    else if (st == "certify") guarded(st, [&] { certify(); });
    else if (st == "simulate") guarded(st, [&] { simulate(); });
    else if (st == "perf") guarded(st, [&] { perf(); });
  }
  Artifacts out;
  guarded("report", [&] { finish(out); });
  return out;
}

}  // namespace

const std::vector<std::string>& pipeline_stage_names() {
  static const std::vector<std::string> names = {"synth", "solve", "certify", "simulate", "perf"};
  return names;
}

std::vector<std::string> parse_stage_list(const std::string& list) {
  std::vector<bool> want(pipeline_stage_names().size(), false);
  std::stringstream ss(list);
  std::string item;
  bool any = false;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    any = true;
    if (item == "all") {
      std::fill(want.begin(), want.end(), true);
      continue;
    }
    const auto& names = pipeline_stage_names();
    const auto it = std::find(names.begin(), names.end(), item);
    if (it == names.end()) throw ParseError("unknown stage '" + item + "'; expected synth, solve, certify, simulate, perf or all");
    want[it - names.begin()] = true;
  }
  if (!any) throw ParseError("empty stage list");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < want.size(); ++i)
    if (want[i]) out.push_back(pipeline_stage_names()[i]);
  return out;
}

std::vector<std::string> close_stage_list(const std::vector<std::string>& stages) {
  const auto& names = pipeline_stage_names();
  std::vector<bool> want(names.size(), false);
  std::vector<std::string> todo = stages;
  while (!todo.empty()) {
    const std::string st = todo.back();
    todo.pop_back();
    const auto it = std::find(names.begin(), names.end(), st);
    if (it == names.end()) throw ParseError("unknown stage '" + st + "'");
    if (want[it - names.begin()]) continue;
    want[it - names.begin()] = true;
    for (const auto& dep : stage_dependencies().at(st)) todo.push_back(dep);
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < names.size(); ++i)
    if (want[i]) out.push_back(names[i]);
  return out;
}

Artifacts execute_pipeline(const RunManifest& manifest) {
  if (manifest.paths < 2) throw ValidationError("--paths must be at least 2");
  if (manifest.steps < 1) throw ValidationError("--steps must be at least 1");
  Run run(manifest);
  return run.execute();
}

void write_artifacts(const Artifacts& artifacts, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path target = fs::absolute(out_dir).lexically_normal();
  const fs::path parent = target.parent_path();
  fs::create_directories(parent);
  const fs::path tmp = parent / (target.filename().string() + ".partial");
  fs::remove_all(tmp);
  fs::create_directory(tmp);
  for (const auto& [name, content] : artifacts.files) {
    std::ofstream f(tmp / name, std::ios::binary);
    f << content;
    if (!f) throw Error("cannot write " + (tmp / name).string());
  }
  const fs::path old = parent / (target.filename().string() + ".previous");
  fs::remove_all(old);
  if (fs::exists(target)) fs::rename(target, old);
  fs::rename(tmp, target);
  fs::remove_all(old);
}

}  // namespace srhc
