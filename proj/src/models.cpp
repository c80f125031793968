#include "srhc/models.hpp"

#include "srhc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

namespace srhc {

SystemModel SystemModel::linear(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols()) throw DimensionError("system matrix A must be square");
  if (b.rows() != a.rows()) throw DimensionError("system matrix B must have as many rows as A");
  SystemModel s;
  s.state_dim = a.rows();
  s.control_dim = b.cols();
  s.noise_dim = a.rows();
  s.kind = Kind::linear_affine;
  s.A = a;
  s.B = b;
  s.map_name = "linear-affine";
  s.transition = [a, b](const Vector& x, const Vector& u, const Vector& w) -> Vector { return a * x + b * u + w; };
  return s;
}

SystemModel SystemModel::clamped_linear(const Matrix& a, const Matrix& b, const Vector& lo, const Vector& hi) {
  SystemModel s = linear(a, b);
  require_dim(lo, s.state_dim, "clamp lower bound");
  require_dim(hi, s.state_dim, "clamp upper bound");
  if ((lo.array() > hi.array()).any()) throw ValidationError("clamp bounds: lower exceeds upper");
  s.kind = Kind::general;
  s.map_name = "clamped-linear";
  s.transition = [a, b, lo, hi](const Vector& x, const Vector& u, const Vector& w) -> Vector {
    return (a * x + b * u + w).cwiseMax(lo).cwiseMin(hi);
  };
  return s;
}

SystemModel SystemModel::general(Eigen::Index d, Eigen::Index m, Eigen::Index p, TransitionFn f, std::string name) {
  if (d < 1 || m < 1 || p < 1) throw ValidationError("system dimensions must be positive");
  if (!f) throw ValidationError("general system needs a transition map");
  SystemModel s;
  s.state_dim = d;
  s.control_dim = m;
  s.noise_dim = p;
  s.kind = Kind::general;
  s.map_name = std::move(name);
  s.transition = std::move(f);
  return s;
}

Vector SystemModel::step(const Vector& x, const Vector& u, const Vector& w) const {
  require_dim(x, state_dim, "state");
  require_dim(u, control_dim, "control");
  require_dim(w, noise_dim, "noise");
  return transition(x, u, w);
}

NoiseModel NoiseModel::gaussian(const Vector& mean, const Matrix& covariance, std::uint64_t seed) {
  if (mean.size() < 1) throw ValidationError("noise dimension must be positive");
  if (covariance.rows() != mean.size() || covariance.cols() != mean.size())
    throw DimensionError("noise covariance must be " + std::to_string(mean.size()) + "x" +
                         std::to_string(mean.size()));
  if (!mean.allFinite() || !covariance.allFinite()) throw ValidationError("noise parameters must be finite");
  if (!linalg::is_symmetric(covariance, 1e-10 * std::max(1.0, covariance.cwiseAbs().maxCoeff())))
    throw ValidationError("noise covariance is not symmetric");
  NoiseModel n;
  n.law_ = Law::gaussian;
  n.dim_ = mean.size();
  n.seed_ = seed;
  n.mean_ = mean;
  n.covariance_ = linalg::symmetrize(covariance);
  n.factor_ = linalg::psd_factor(n.covariance_);
  return n;
}

NoiseModel NoiseModel::empirical(std::vector<Vector> table, std::uint64_t seed) {
  if (table.empty()) throw ValidationError("empirical noise table is empty");
  const Eigen::Index p = table.front().size();
  if (p < 1) throw ValidationError("noise dimension must be positive");
  for (const auto& row : table) {
    if (row.size() != p) throw DimensionError("empirical noise table rows differ in length");
    if (!row.allFinite()) throw ValidationError("empirical noise table has non-finite entries");
  }
  NoiseModel n;
  n.law_ = Law::empirical;
  n.dim_ = p;
  n.seed_ = seed;
  n.mean_ = Vector::Zero(p);
  for (const auto& row : table) n.mean_ += row;
  n.mean_ /= static_cast<double>(table.size());
  n.covariance_ = Matrix::Zero(p, p);
  for (const auto& row : table) n.covariance_ += (row - n.mean_) * (row - n.mean_).transpose();
  n.covariance_ /= static_cast<double>(table.size());
  n.table_ = std::move(table);
  return n;
}

Vector NoiseModel::sample(Rng& rng) const {
  if (law_ == Law::empirical) {
    std::uniform_int_distribution<std::size_t> pick(0, table_.size() - 1);
    return table_[pick(rng)];
  }
  std::normal_distribution<double> z(0.0, 1.0);
  Vector e(factor_.cols());
  for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = z(rng);
  return mean_ + factor_ * e;
}

ExpectationRule NoiseModel::quadrature(int nodes_per_dim, std::size_t max_table_rows) const {
  if (law_ == Law::gaussian) return gaussian_rule(mean_, covariance_, nodes_per_dim);
  if (max_table_rows == 0 || table_.size() <= max_table_rows) return table_rule(table_);
  // Common random numbers: one fixed subsample shared by every backup.
  std::vector<std::size_t> idx(table_.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<std::size_t> chosen;
  Rng rng = make_rng(seed_, {0x7AB1E5ULL});
  std::sample(idx.begin(), idx.end(), std::back_inserter(chosen), max_table_rows, rng);
  std::vector<Vector> rows;
  rows.reserve(chosen.size());
  for (std::size_t i : chosen) rows.push_back(table_[i]);
  return table_rule(rows);
}

NoiseExpectation::NoiseExpectation(const NoiseModel& noise, int gauss_hermite_nodes) : noise_(&noise) {
  if (noise.is_scalar_gaussian()) {
    adaptive_ = true;
    method_ = "adaptive-gauss-kronrod";
    return;
  }
  if (noise.law() == NoiseModel::Law::empirical) {
    rule_ = noise.quadrature(0);
    method_ = "table-average";
    return;
  }
  int n = gauss_hermite_nodes;
  if (n <= 0) n = noise.dim() == 2 ? 40 : 16;
  rule_ = noise.quadrature(n);
  method_ = "gauss-hermite-" + std::to_string(n);
}

double NoiseExpectation::operator()(const std::function<double(const Vector&)>& h) const {
  if (adaptive_) {
    const double mu = noise_->mean()(0);
    const double sigma = std::sqrt(noise_->covariance()(0, 0));
    Vector w(1);
    if (sigma == 0.0) {
      w(0) = mu;
      return h(w);
    }
    return adaptive_gaussian_expectation(mu, sigma, [&](double v) {
      Vector wv(1);
      wv(0) = v;
      return h(wv);
    });
  }
  return rule_.expect(h);
}

ControlSet ControlSet::unconstrained(Eigen::Index m) {
  if (m < 1) throw ValidationError("control dimension must be positive");
  ControlSet c;
  c.kind_ = Kind::unconstrained;
  c.dim_ = m;
  return c;
}

ControlSet ControlSet::box(const Vector& lower, const Vector& upper) {
  if (lower.size() < 1 || lower.size() != upper.size()) throw DimensionError("box bounds must have equal size");
  if ((lower.array() > upper.array()).any()) throw ValidationError("box lower bound exceeds upper bound");
  if ((lower.array() > 0.0).any() || (upper.array() < 0.0).any())
    throw ValidationError("control set must contain 0");
  ControlSet c;
  c.kind_ = Kind::box;
  c.dim_ = lower.size();
  c.lower_ = lower;
  c.upper_ = upper;
  return c;
}

ControlSet ControlSet::norm_ball(Eigen::Index m, double radius) {
  if (m < 1) throw ValidationError("control dimension must be positive");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ValidationError("U_max must be positive and finite");
  ControlSet c;
  c.kind_ = Kind::norm_ball;
  c.dim_ = m;
  c.radius_ = radius;
  return c;
}

bool ControlSet::contains(const Vector& u) const {
  if (u.size() != dim_ || !u.allFinite()) return false;
  switch (kind_) {
    case Kind::unconstrained:
      return true;
    case Kind::box:
      return (u.array() >= lower_.array()).all() && (u.array() <= upper_.array()).all();
    case Kind::norm_ball:
      return u.norm() <= radius_;
  }
  return false;
}

Vector ControlSet::project(const Vector& u) const {
  require_dim(u, dim_, "control");
  if (contains(u)) return u;
  switch (kind_) {
    case Kind::unconstrained:
      return u;
    case Kind::box:
      return u.cwiseMax(lower_).cwiseMin(upper_);
    case Kind::norm_ball: {
      Vector v = (u / u.norm()) * radius_;
      while (v.norm() > radius_) v *= std::nextafter(1.0, 0.0);
      return v;
    }
  }
  return u;
}

std::vector<Vector> ControlSet::discretize(int points_per_dim, const Vector& lo, const Vector& hi) const {
  if (points_per_dim < 1) throw ValidationError("control_points must be positive");
  Vector a(dim_), b(dim_);
  switch (kind_) {
    case Kind::unconstrained:
      require_dim(lo, dim_, "control_min");
      require_dim(hi, dim_, "control_max");
      a = lo;
      b = hi;
      break;
    case Kind::box:
      a = lower_;
      b = upper_;
      break;
    case Kind::norm_ball:
      a = Vector::Constant(dim_, -radius_);
      b = Vector::Constant(dim_, radius_);
      break;
  }
  std::vector<std::vector<double>> axes(dim_);
  for (Eigen::Index j = 0; j < dim_; ++j) {
    auto& ax = axes[j];
    if (points_per_dim == 1) {
      ax.push_back(0.5 * (a(j) + b(j)));
    } else {
      for (int i = 0; i < points_per_dim; ++i)
        ax.push_back(a(j) + (b(j) - a(j)) * static_cast<double>(i) / (points_per_dim - 1));
    }
    for (double& v : ax)
      if (std::abs(v) < 1e-12 * std::max(1.0, b(j) - a(j))) v = 0.0;
    ax.push_back(0.0);
    std::sort(ax.begin(), ax.end());
    ax.erase(std::unique(ax.begin(), ax.end()), ax.end());
  }
  std::vector<Vector> out;
  std::vector<std::size_t> idx(dim_, 0);
  while (true) {
    Vector u(dim_);
    for (Eigen::Index j = 0; j < dim_; ++j) u(j) = axes[j][idx[j]];
    if (contains(u)) out.push_back(u);
    Eigen::Index j = dim_ - 1;
    while (j >= 0 && ++idx[j] == axes[j].size()) idx[j--] = 0;
    if (j < 0) break;
  }
  return out;
}

double Scenario::stage_cost(const Vector& x, const Vector& u) const { return cost.stage(x, u); }

double Scenario::terminal_cost(const Vector& x) const { return cost.terminal(x); }

double eval_stage_cost(const Scenario& s, const Vector& x, const Vector& u) {
  require_dim(x, s.system.state_dim, "state");
  require_dim(u, s.system.control_dim, "control");
  return s.cost.stage(x, u);
}

}  // namespace srhc
