#include "srhc/montecarlo.hpp"

#include "srhc/parallel.hpp"
#include "srhc/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace srhc {

std::size_t TrajectoryEnsemble::flagged_count() const {
  return static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), char{1}));
}

TrajectoryEnsemble simulate(const Scenario& s, const ControlLaw& law, const Vector& x0, int steps, std::size_t n_paths,
                            std::uint64_t seed) {
  if (steps < 1 || n_paths < 1) throw ValidationError("simulate: steps and paths must be at least 1");
  require_dim(x0, s.system.state_dim, "initial state");
  TrajectoryEnsemble e;
  e.scenario = s.name;
  e.policy = law.name();
  e.x0 = x0;
  e.n_paths = n_paths;
  e.steps = steps;
  e.seed = seed;
  e.d = s.system.state_dim;
  e.m = s.system.control_dim;
  e.p = s.system.noise_dim;
  const std::size_t T = static_cast<std::size_t>(steps);
  e.states.assign(n_paths * (T + 1) * e.d, std::numeric_limits<double>::quiet_NaN());
  e.controls.assign(n_paths * T * e.m, std::numeric_limits<double>::quiet_NaN());
  e.noise.assign(n_paths * T * e.p, std::numeric_limits<double>::quiet_NaN());
  e.costs.assign(n_paths * T, std::numeric_limits<double>::quiet_NaN());
  e.flagged.assign(n_paths, 0);
  e.flag_time.assign(n_paths, -1);
  const int kappa = law.block_length();
  if (kappa < 1) throw ValidationError("control law block length must be positive");

  parallel_for(n_paths, [&](std::size_t i) {
    Rng rng = make_rng(seed, {s.noise.seed(), static_cast<std::uint64_t>(i)});
    Vector x = x0;
    std::vector<Vector> block;
    double* xs = &e.states[i * (T + 1) * e.d];
    Eigen::Map<Vector>(xs, e.d) = x;
    for (int t = 0; t < steps; ++t) {
      if (t % kappa == 0) {
        block = law.block(x);
        if (static_cast<int>(block.size()) != kappa) throw DimensionError("control block has the wrong length");
      }
      const Vector& u = block[static_cast<std::size_t>(t % kappa)];
      require_dim(u, e.m, "control");
      const Vector w = s.noise.sample(rng);
      const double c = s.cost.stage(x, u);
      const Vector next = s.system.transition(x, u, w);
      Eigen::Map<Vector>(&e.controls[(i * T + t) * e.m], e.m) = u;
      Eigen::Map<Vector>(&e.noise[(i * T + t) * e.p], e.p) = w;
      e.costs[i * T + t] = c;
      if (!next.allFinite() || !std::isfinite(c)) {
        e.flagged[i] = 1;
        e.flag_time[i] = t;
        return;
      }
      x = next;
      Eigen::Map<Vector>(xs + (t + 1) * e.d, e.d) = x;
    }
  });
  return e;
}

LyapunovSequence expected_lyapunov_sequence(const TrajectoryEnsemble& e, const std::function<double(const Vector&)>& v) {
  LyapunovSequence out;
  out.excluded = e.flagged_count();
  out.warning = static_cast<double>(out.excluded) > 0.01 * static_cast<double>(e.n_paths);
  std::vector<std::size_t> paths;
  for (std::size_t i = 0; i < e.n_paths; ++i)
    if (!e.flagged[i]) paths.push_back(i);
  out.points.resize(static_cast<std::size_t>(e.steps) + 1);
  parallel_for(out.points.size(), [&](std::size_t tt) {
    const int t = static_cast<int>(tt);
    double mean = 0.0, m2 = 0.0;
    std::size_t n = 0;
    for (std::size_t i : paths) {
      const double val = v(e.state(i, t));
      ++n;
      const double delta = val - mean;
      mean += delta / static_cast<double>(n);
      m2 += delta * (val - mean);
    }
    SequencePoint& p = out.points[tt];
    p.t = t;
    p.mean = n ? mean : std::numeric_limits<double>::quiet_NaN();
    p.std_error = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
  });
  return out;
}

std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // The endpoints are exactly 0 and 1 at k = 0 and k = n; rounding must not exclude p.
  return {k == 0 ? 0.0 : std::max(0.0, center - half), k == n ? 1.0 : std::min(1.0, center + half)};
}

namespace {

TailRow make_row(int t, double r, std::size_t count, std::size_t n) {
  TailRow row;
  row.t = t;
  row.r = r;
  row.count = count;
  row.n = n;
  row.p_hat = n ? static_cast<double>(count) / static_cast<double>(n) : 0.0;
  std::tie(row.lo, row.hi) = wilson_interval(count, n);
  return row;
}

void check_radii(const std::vector<double>& radii) {
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw ValidationError("tail radii must be positive");
    if (i > 0 && !(radii[i] > radii[i - 1])) throw ValidationError("tail radii must be increasing");
  }
}

}  // namespace

std::vector<TailRow> tail_estimate(const TrajectoryEnsemble& e, const std::vector<double>& radii,
                                   const std::vector<int>& times) {
  check_radii(radii);
  std::vector<int> ts = times;
  if (ts.empty())
    for (int t = 0; t <= e.steps; ++t) ts.push_back(t);
  std::vector<TailRow> rows;
  for (int t : ts) {
    if (t < 0 || t > e.steps) throw ValidationError("tail_estimate: time out of range");
    std::vector<std::size_t> counts(radii.size(), 0);
    std::size_t n = 0;
    for (std::size_t i = 0; i < e.n_paths; ++i) {
      if (e.flagged[i]) continue;
      ++n;
      const double norm = e.state(i, t).norm();
      for (std::size_t j = 0; j < radii.size(); ++j)
        if (norm > radii[j]) ++counts[j];
    }
    for (std::size_t j = 0; j < radii.size(); ++j) rows.push_back(make_row(t, radii[j], counts[j], n));
  }
  return rows;
}

std::vector<TailRow> pooled_tail(const TrajectoryEnsemble& e, const std::vector<double>& radii, int t_from, int t_to) {
  check_radii(radii);
  if (t_from < 0 || t_to > e.steps || t_from > t_to) throw ValidationError("pooled_tail: bad time window");
  std::vector<std::size_t> counts(radii.size(), 0);
  std::size_t n = 0;
  for (std::size_t i = 0; i < e.n_paths; ++i) {
    if (e.flagged[i]) continue;
    for (int t = t_from; t <= t_to; ++t) {
      ++n;
      const double norm = e.state(i, t).norm();
      for (std::size_t j = 0; j < radii.size(); ++j)
        if (norm > radii[j]) ++counts[j];
    }
  }
  std::vector<TailRow> rows;
  for (std::size_t j = 0; j < radii.size(); ++j) rows.push_back(make_row(-1, radii[j], counts[j], n));
  return rows;
}

double tail_log_slope(const std::vector<TailRow>& rows, std::size_t min_count) {
  std::vector<double> xs, ys;
  for (const auto& r : rows)
    if (r.count >= min_count && r.p_hat > 0.0) {
      xs.push_back(r.r);
      ys.push_back(std::log(r.p_hat));
    }
  if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i] / n, my += ys[i] / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

double sample_moment(const TrajectoryEnsemble& e, int t, double p) {
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < e.n_paths; ++i) {
    if (e.flagged[i]) continue;
    acc += std::pow(e.state(i, t).norm(), p);
    ++n;
  }
  return n ? acc / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

double tail_moment(const TrajectoryEnsemble& e, int t, double p) {
  std::vector<double> norms;
  for (std::size_t i = 0; i < e.n_paths; ++i)
    if (!e.flagged[i]) norms.push_back(e.state(i, t).norm());
  if (norms.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(norms.begin(), norms.end());
  const double rmax = norms.back();
  if (rmax == 0.0) return 0.0;
  const int m = 4000;
  const double h = rmax / m;
  const double n = static_cast<double>(norms.size());
  auto survival = [&](double r) {
    const auto it = std::upper_bound(norms.begin(), norms.end(), r);
    return static_cast<double>(norms.end() - it) / n;
  };
  double acc = 0.0;
  for (int k = 0; k <= m; ++k) {
    const double r = h * k;
    const double f = p * std::pow(r, p - 1.0) * survival(r);
    acc += (k == 0 || k == m) ? 0.5 * f : f;
  }
  return acc * h;
}

AverageCostEstimate average_cost(const TrajectoryEnsemble& e, double b) {
  AverageCostEstimate out;
  out.b = b;
  const int T = e.steps;
  std::vector<std::size_t> paths;
  for (std::size_t i = 0; i < e.n_paths; ++i)
    if (!e.flagged[i]) paths.push_back(i);
  if (paths.empty()) throw NumericalError("average_cost: every path was flagged");
  out.running.assign(T, 0.0);
  std::vector<double> per_path(paths.size());
  const double n = static_cast<double>(paths.size());
  for (std::size_t k = 0; k < paths.size(); ++k) {
    double cum = 0.0;
    for (int t = 0; t < T; ++t) {
      cum += e.cost(paths[k], t);
      out.running[t] += cum / (t + 1.0) / n;
    }
    per_path[k] = cum / T;
  }
  out.final = out.running.back();
  double m2 = 0.0;
  for (double v : per_path) m2 += (v - out.final) * (v - out.final);
  out.std_error = paths.size() > 1 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0;
  out.pass = out.final - 3.0 * out.std_error <= b;
  out.last_quartile_drift = std::abs(out.final - out.running[static_cast<std::size_t>(3 * T / 4)]);
  out.non_stationary = out.last_quartile_drift > out.std_error;
  return out;
}

CesaroResult check_cesaro_condition(const std::vector<SequencePoint>& seq, double cap) {
  if (seq.size() < 100) throw ValidationError("Cesaro check needs a sequence of length at least 100");
  CesaroResult r;
  for (const auto& p : seq) r.max_mean = std::max(r.max_mean, p.mean);
  const std::size_t start = seq.size() / 2;
  const double m = static_cast<double>(seq.size() - start);
  double tx = 0, ty = 0;
  for (std::size_t i = start; i < seq.size(); ++i) tx += seq[i].t / m, ty += seq[i].mean / m;
  double sxx = 0, sxy = 0, var_ind = 0;
  for (std::size_t i = start; i < seq.size(); ++i) {
    const double dx = seq[i].t - tx;
    sxx += dx * dx;
    sxy += dx * (seq[i].mean - ty);
    var_ind += dx * dx * seq[i].std_error * seq[i].std_error;
  }
  r.slope = sxy / sxx;
  double rss = 0;
  for (std::size_t i = start; i < seq.size(); ++i) {
    const double res = seq[i].mean - ty - r.slope * (seq[i].t - tx);
    rss += res * res;
  }
  const double se_res = std::sqrt(rss / (m - 2.0) / sxx);
  const double se_ind = std::sqrt(var_ind) / sxx;
  r.slope_se = std::max(se_res, se_ind);
  r.bounded = std::isfinite(cap) && r.max_mean <= cap;
  const double floor = 1e-12 * std::max(1.0, std::abs(ty)) / std::sqrt(sxx);
  r.pass = r.bounded || std::abs(r.slope) <= 3.0 * r.slope_se + floor;
  return r;
}

std::vector<Theorem2Row> check_theorem2_inequality(const Scenario& s, const HorizonSolution& v,
                                                   const StagePolicy& g_tilde, const Vector& x0,
                                                   const Theorem2Options& o) {
  const int N = s.horizon;
  if (static_cast<int>(v.stages.length()) != N)
    throw ValidationError("theorem-2 check needs all stage policies pi_0*..pi_{N-1}*; run solve_horizon first");
  if (o.k_max < 0 || o.outer_paths < 2 || o.inner_paths < 1) throw ValidationError("theorem-2 check: bad sizes");
  require_dim(x0, s.system.state_dim, "initial state");
  const int K = o.k_max;
  const std::size_t n = o.outer_paths;
  // Per outer path, per k: paired difference D and chain gap G.
  std::vector<double> cum_cost(n * (K + 1)), v_next(n * (K + 1)), t_sum(n * (K + 1));
  const double v0 = v.value(x0);
  const StagePolicy& pi0 = v.stages[0];

  parallel_for(n, [&](std::size_t i) {
    Rng outer = make_rng(o.seed, {0x0A7E5ULL, i});
    Vector x = x0;
    double c_acc = 0.0, t_acc = 0.0;
    for (int l = 0; l <= K; ++l) {
      // Inner lookahead: N steps under pi*, then one sample of T_g~.
      Rng inner = make_rng(o.seed, {0x1A7E5ULL, i, static_cast<std::uint64_t>(l)});
      double t_mean = 0.0;
      for (std::size_t j = 0; j < o.inner_paths; ++j) {
        Vector y = x;
        for (int k = 0; k < N; ++k) y = s.system.transition(y, v.stages[k](y), s.noise.sample(inner));
        const Vector g = g_tilde(y);
        const double tv = s.cost.stage(y, g) - s.cost.terminal(y) +
                          s.cost.terminal(s.system.transition(y, g, s.noise.sample(inner)));
        t_mean += tv / static_cast<double>(o.inner_paths);
      }
      const Vector u = pi0(x);
      c_acc += s.cost.stage(x, u);
      t_acc += t_mean;
      x = s.system.transition(x, u, s.noise.sample(outer));
      cum_cost[i * (K + 1) + l] = c_acc;
      t_sum[i * (K + 1) + l] = t_acc;
      v_next[i * (K + 1) + l] = v.value(x);
    }
  });

  std::vector<Theorem2Row> rows(K + 1);
  const double nn = static_cast<double>(n);
  // sum_{l<=k} E|V(x_l)|, the scale of the accumulated value-function error.
  double v_abs_sum = std::abs(v0);
  for (int k = 0; k <= K; ++k) {
    double mc = 0, mv = 0, mt = 0, md = 0, mg = 0;
    if (k > 0)
      for (std::size_t i = 0; i < n; ++i) v_abs_sum += std::abs(v_next[i * (K + 1) + k - 1]) / nn;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t at = i * (K + 1) + k;
      mc += cum_cost[at] / nn;
      mv += v_next[at] / nn;
      mt += t_sum[at] / nn;
      md += (cum_cost[at] - (v0 - v_next[at] + t_sum[at])) / nn;
      mg += (t_sum[at] - (k + 1) * o.b) / nn;
    }
    double sd = 0, sg = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t at = i * (K + 1) + k;
      const double dd = cum_cost[at] - (v0 - v_next[at] + t_sum[at]) - md;
      const double dg = t_sum[at] - (k + 1) * o.b - mg;
      sd += dd * dd;
      sg += dg * dg;
    }
    Theorem2Row& r = rows[k];
    r.k = k;
    r.lhs = mc;
    r.rhs = v0 - mv + mt;
    r.std_error = std::sqrt(sd / (nn - 1.0) / nn);
    r.allowance = o.value_tolerance * v_abs_sum;
    r.pass = md <= o.ci_sigmas * r.std_error + o.abs_tol * std::max(1.0, std::abs(r.rhs)) + r.allowance;
    r.t_sum = mt;
    r.chain_gap = mg;
    r.chain_se = std::sqrt(sg / (nn - 1.0) / nn);
    r.chain_pass = mg <= o.ci_sigmas * r.chain_se + o.abs_tol * std::max(1.0, (k + 1) * std::abs(o.b));
  }
  return rows;
}

void write_sequence_csv(std::ostream& os, const std::vector<SequencePoint>& seq, const std::string& label) {
  os << "t," << csv_field(label + "_mean") << "," << csv_field(label + "_stderr") << "\r\n";
  for (const auto& p : seq) os << p.t << ',' << fmt(p.mean) << ',' << fmt(p.std_error) << "\r\n";
}

}  // namespace srhc
