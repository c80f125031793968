#include "srhc/policy.hpp"

#include "srhc/linalg.hpp"
#include "srhc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace srhc {

StagePolicy StagePolicy::analytic(std::string id, Eigen::Index state_dim, Eigen::Index control_dim, Map f,
                                  std::optional<ControlSet> controls) {
  if (!f) throw ValidationError("analytic policy needs a map");
  if (controls && controls->dim() != control_dim) throw DimensionError("policy control set dimension mismatch");
  StagePolicy p;
  p.rep_ = Representation::analytic;
  p.id_ = std::move(id);
  p.d_ = state_dim;
  p.m_ = control_dim;
  p.map_ = std::move(f);
  p.controls_ = std::move(controls);
  return p;
}

StagePolicy StagePolicy::linear_gain(const Matrix& k, std::optional<ControlSet> controls) {
  if (controls && controls->dim() != k.rows()) throw DimensionError("policy control set dimension mismatch");
  StagePolicy p;
  p.rep_ = Representation::linear_gain;
  p.id_ = "linear-gain";
  p.d_ = k.cols();
  p.m_ = k.rows();
  p.gain_ = k;
  p.map_ = [k](const Vector& x) -> Vector { return k * x; };
  p.controls_ = std::move(controls);
  return p;
}

StagePolicy StagePolicy::saturated_linear(const Matrix& k, double radius) {
  StagePolicy p;
  p.rep_ = Representation::saturated_linear;
  p.id_ = "saturated-linear";
  p.d_ = k.cols();
  p.m_ = k.rows();
  p.gain_ = k;
  p.radius_ = radius;
  p.map_ = [k, radius](const Vector& x) -> Vector { return sat_radial(k * x, radius); };
  p.controls_ = ControlSet::norm_ball(k.rows(), radius);
  return p;
}

StagePolicy StagePolicy::grid_table(std::shared_ptr<const Grid> grid, std::vector<Vector> controls_at_nodes,
                                    ControlSet controls) {
  if (!grid) throw ValidationError("grid-table policy needs a grid");
  if (controls_at_nodes.size() != grid->size()) throw DimensionError("grid-table policy: one control per node required");
  for (const auto& u : controls_at_nodes) require_dim(u, controls.dim(), "grid-table control");
  StagePolicy p;
  p.rep_ = Representation::grid_table;
  p.id_ = "grid-table";
  p.d_ = grid->dim();
  p.m_ = controls.dim();
  p.grid_ = std::move(grid);
  p.table_ = std::move(controls_at_nodes);
  p.controls_ = std::move(controls);
  return p;
}

Vector StagePolicy::operator()(const Vector& x) const {
  require_dim(x, d_, "policy state");
  Vector u = rep_ == Representation::grid_table ? grid_->interpolate(table_, x) : map_(x);
  require_dim(u, m_, "policy output");
  return controls_ ? controls_->project(u) : u;
}

void StagePolicy::write_csv(std::ostream& os) const {
  if (rep_ != Representation::grid_table) throw ValidationError("only grid-table policies serialize to CSV");
  os << std::setprecision(17);
  os << "# grid_dim=" << d_ << ",control_dim=" << m_ << ",nodes=" << grid_->size();
  for (Eigen::Index j = 0; j < d_; ++j) os << ",axis" << j << "_points=" << grid_->axis(j).size();
  os << "\n";
  for (Eigen::Index j = 0; j < d_; ++j) os << (j ? "," : "") << "x" << j;
  for (Eigen::Index j = 0; j < m_; ++j) os << ",u" << j;
  os << "\n";
  for (std::size_t i = 0; i < grid_->size(); ++i) {
    const Vector x = grid_->node(i);
    for (Eigen::Index j = 0; j < d_; ++j) os << (j ? "," : "") << x(j);
    for (Eigen::Index j = 0; j < m_; ++j) os << "," << table_[i](j);
    os << "\n";
  }
}

PolicySequence::PolicySequence(std::vector<StagePolicy> stages) : stages_(std::move(stages)) {
  for (const auto& s : stages_)
    if (s.state_dim() != stages_.front().state_dim() || s.control_dim() != stages_.front().control_dim())
      throw DimensionError("policy sequence stages have inconsistent dimensions");
}

PolicySequence concat(const PolicySequence& p1, const PolicySequence& p2) {
  if (p1.empty()) return p2;
  if (p2.empty()) return p1;
  if (p1[0].state_dim() != p2[0].state_dim() || p1[0].control_dim() != p2[0].control_dim())
    throw DimensionError("cannot concatenate policies with different state/control dimensions");
  std::vector<StagePolicy> all = p1.stages();
  all.insert(all.end(), p2.stages().begin(), p2.stages().end());
  return PolicySequence(std::move(all));
}

Vector sat_radial(const Vector& z, double r) {
  if (!(r > 0.0)) throw ValidationError("saturation radius must be positive");
  const double n = z.norm();
  if (n == 0.0) return Vector::Zero(z.size());
  if (n <= r) return z;
  Vector v = (z / n) * r;
  while (v.norm() > r) v *= std::nextafter(1.0, 0.0);
  return v;
}

double scalar_sat_policy(double x) { return -std::clamp(x, -1.0, 1.0); }

Matrix reachability_matrix(const Matrix& a, const Matrix& m, int j) {
  if (a.rows() != a.cols() || m.rows() != a.rows()) throw DimensionError("reachability matrix: incompatible shapes");
  if (j < 1) throw ValidationError("reachability matrix needs j >= 1");
  Matrix r(a.rows(), m.cols() * j);
  Matrix block = m;
  // Rightmost block is M, then AM, ..., leftmost A^{j-1}M.
  for (int i = j - 1; i >= 0; --i) {
    r.middleCols(static_cast<Eigen::Index>(i) * m.cols(), m.cols()) = block;
    block = a * block;
  }
  return r;
}

int reachability_index(const Matrix& a, const Matrix& b) {
  const Eigen::Index d = a.rows();
  for (int j = 1; j <= d; ++j)
    if (linalg::rank(reachability_matrix(a, b, j), 1e-10) == d) return j;
  throw ValidationError("(A, B) is not controllable");
}

void compute_rho(OrthoStabilizer& s, const NoiseModel& noise, const RhoOptions& options) {
  const Eigen::Index d = s.A.rows();
  Matrix cov = Matrix::Zero(d, d);
  Matrix ak = Matrix::Identity(d, d);
  for (int i = 0; i < s.kappa; ++i) {
    cov += ak * noise.covariance() * ak.transpose();
    ak = s.A * ak;
  }
  s.block_noise_cov = linalg::symmetrize(cov);
  auto expo = [](double r) { return std::exp(r); };
  auto ident = [](double r) { return r; };
  if (effective_rank(s.block_noise_cov) <= 3) {
    s.rho = std::log(gaussian_norm_expectation(s.block_noise_cov, expo));
    s.rho_example3 = std::log(gaussian_norm_expectation(s.block_noise_cov, ident));
    s.rho_ci_halfwidth = 0.0;
    s.rho_method = "quadrature";
  } else {
    const auto e = gaussian_norm_expectation_mc(s.block_noise_cov, expo, options.mc_samples, options.seed);
    const auto e3 = gaussian_norm_expectation_mc(s.block_noise_cov, ident, options.mc_samples, options.seed);
    s.rho = std::log(e.mean);
    s.rho_example3 = std::log(e3.mean);
    // Delta method on the log, 99% two-sided.
    s.rho_ci_halfwidth = 2.5758293035489 * e.std_error / e.mean;
    s.rho_method = "monte-carlo(" + std::to_string(options.mc_samples) + ")";
  }
}

OrthoStabilizer make_ortho_stabilizer(const Matrix& a, const Matrix& b, const NoiseModel& noise, double u_max,
                                      const RhoOptions& options) {
  const Eigen::Index d = a.rows();
  if (a.cols() != d || b.rows() != d) throw DimensionError("ortho stabilizer: incompatible A, B");
  if ((a.transpose() * a - Matrix::Identity(d, d)).norm() > 1e-10) throw ValidationError("A is not orthogonal");
  if (noise.law() != NoiseModel::Law::gaussian) throw ValidationError("ortho stabilizer requires Gaussian noise");
  if (noise.dim() != d) throw DimensionError("noise dimension must equal state dimension");
  if (noise.mean().cwiseAbs().maxCoeff() > 0.0) throw ValidationError("ortho stabilizer requires zero-mean noise");
  if (!(u_max > 0.0)) throw ValidationError("U_max must be positive");

  OrthoStabilizer s;
  s.A = a;
  s.B = b;
  s.kappa = reachability_index(a, b);
  s.A_kappa = Matrix::Identity(d, d);
  for (int i = 0; i < s.kappa; ++i) s.A_kappa = a * s.A_kappa;
  s.reach_B = reachability_matrix(a, b, s.kappa);
  s.reach_pinv = linalg::pseudo_inverse(s.reach_B);
  s.reach_I = reachability_matrix(a, Matrix::Identity(d, d), s.kappa);
  s.u_max = u_max;
  compute_rho(s, noise, options);
  if (!(u_max > s.rho)) {
    std::ostringstream os;
    os << "insufficient control authority: U_max = " << u_max << " must exceed rho = " << s.rho;
    throw InsufficientAuthorityError(os.str(), s.rho);
  }
  s.lambda_circ = std::exp(s.rho - u_max);
  s.K_radius = 2.0 * s.rho;
  return s;
}

std::vector<Vector> ortho_control_block(const OrthoStabilizer& s, const Vector& x) {
  require_dim(x, s.A.rows(), "state");
  const Vector stacked = -s.reach_pinv * sat_radial(s.A_kappa * x, s.u_max);
  const Eigen::Index m = s.B.cols();
  std::vector<Vector> out;
  out.reserve(s.kappa);
  for (int i = 0; i < s.kappa; ++i) out.push_back(stacked.segment(static_cast<Eigen::Index>(i) * m, m));
  return out;
}

ControlLaw ControlLaw::stationary(const StagePolicy& policy, std::string name) {
  if (name.empty()) name = policy.id();
  return ControlLaw(std::move(name), 1, [policy](const Vector& x) { return std::vector<Vector>{policy(x)}; });
}

ControlLaw ControlLaw::stationary(const RecedingHorizonPolicy& policy) {
  return stationary(policy.first_stage(), "receding-horizon(" + policy.provenance() + ")");
}

ControlLaw ControlLaw::ortho(const OrthoStabilizer& s) {
  return ControlLaw("ortho-stabilizer", s.kappa, [s](const Vector& x) { return ortho_control_block(s, x); });
}

}  // namespace srhc
