#include "srhc/quadrature.hpp"

#include "srhc/linalg.hpp"
#include "srhc/rng.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace srhc {

namespace {

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights are
// mu0 times the squared first eigenvector components.
Rule1D golub_welsch(const Vector& offdiag, double mu0) {
  const Eigen::Index n = offdiag.size() + 1;
  Matrix j = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    j(i, i + 1) = offdiag(i);
    j(i + 1, i) = offdiag(i);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(j);
  Rule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    rule.nodes[i] = es.eigenvalues()(i);
    const double v = es.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v * v;
  }
  // Symmetric rules: enforce exact symmetry so odd moments vanish.
  for (Eigen::Index i = 0; i < n / 2; ++i) {
    const Eigen::Index k = n - 1 - i;
    const double x = 0.5 * (rule.nodes[k] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[k] + rule.weights[i]);
    rule.nodes[i] = -x;
    rule.nodes[k] = x;
    rule.weights[i] = rule.weights[k] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace

Rule1D gauss_hermite(int n) {
  if (n < 1) throw ValidationError("Gauss-Hermite rule needs at least one node");
  Vector off(n - 1);
  for (int k = 1; k < n; ++k) off(k - 1) = std::sqrt(static_cast<double>(k));
  return golub_welsch(off, 1.0);
}

Rule1D gauss_legendre(int n) {
  if (n < 1) throw ValidationError("Gauss-Legendre rule needs at least one node");
  Vector off(n - 1);
  for (int k = 1; k < n; ++k) off(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
  return golub_welsch(off, 2.0);
}

ExpectationRule::ExpectationRule(std::vector<Vector> nodes, std::vector<double> weights, std::string label)
    : nodes_(std::move(nodes)), weights_(std::move(weights)), label_(std::move(label)) {
  if (nodes_.size() != weights_.size()) throw ValidationError("rule nodes/weights size mismatch");
  if (nodes_.empty()) throw ValidationError("expectation rule is empty");
}

ExpectationRule gaussian_rule(const Vector& mean, const Matrix& cov, int nodes_per_dim) {
  const Matrix l = linalg::psd_factor(cov);
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < l.cols(); ++j)
    if (l.col(j).squaredNorm() > 1e-14 * scale) active.push_back(j);

  const Rule1D gh = gauss_hermite(nodes_per_dim);
  const std::size_t n1 = gh.nodes.size();
  std::size_t total = 1;
  for (std::size_t k = 0; k < active.size(); ++k) total *= n1;

  std::vector<Vector> nodes;
  std::vector<double> weights;
  nodes.reserve(total);
  weights.reserve(total);
  std::vector<std::size_t> idx(active.size(), 0);
  for (std::size_t t = 0; t < total; ++t) {
    Vector w = mean;
    double weight = 1.0;
    for (std::size_t k = 0; k < active.size(); ++k) {
      w += gh.nodes[idx[k]] * l.col(active[k]);
      weight *= gh.weights[idx[k]];
    }
    nodes.push_back(std::move(w));
    weights.push_back(weight);
    for (std::size_t k = active.size(); k-- > 0;) {
      if (++idx[k] < n1) break;
      idx[k] = 0;
    }
  }
  return ExpectationRule(std::move(nodes), std::move(weights),
                         "gauss-hermite(" + std::to_string(nodes_per_dim) + ")");
}

ExpectationRule table_rule(const std::vector<Vector>& rows) {
  if (rows.empty()) throw ValidationError("empirical noise table is empty");
  std::vector<double> weights(rows.size(), 1.0 / static_cast<double>(rows.size()));
  return ExpectationRule(rows, std::move(weights), "table(" + std::to_string(rows.size()) + ")");
}

double adaptive_gaussian_expectation(double mean, double sigma, const std::function<double(double)>& h,
                                     double rel_tol) {
  if (sigma <= 0.0) return h(mean);
  constexpr double inv_sqrt_2pi = 0.3989422804014326779;
  auto integrand = [&](double t) { return h(mean + sigma * t) * inv_sqrt_2pi * std::exp(-0.5 * t * t); };
  constexpr double bound = 16.0;
  double err = 0.0;
  // Split at the mean: kinks of |.|-type integrands typically sit nearby.
  const double left = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, -bound, 0.0, 15,
                                                                                     rel_tol, &err);
  const double right = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, bound, 15,
                                                                                      rel_tol, &err);
  return left + right;
}

std::ptrdiff_t effective_rank(const Matrix& s) {
  if (s.size() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(linalg::symmetrize(s), Eigen::EigenvaluesOnly);
  const double top = std::max(0.0, es.eigenvalues().maxCoeff());
  std::ptrdiff_t r = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > 1e-12 * std::max(1.0, top)) ++r;
  return r;
}

namespace {

// Density of the chi distribution with k degrees of freedom.
double chi_density(double r, int k) {
  const double log_norm = (1.0 - 0.5 * k) * std::log(2.0) - std::lgamma(0.5 * k);
  return std::exp(log_norm + (k - 1) * std::log(r) - 0.5 * r * r);
}

// int_0^inf phi(q r) chi_k(r) dr by composite 10-point Gauss-Legendre on unit panels.
double radial_integral(double q, int k, const std::function<double(double)>& phi) {
  static const Rule1D gl = gauss_legendre(10);
  const double upper = std::ceil(std::max(0.0, q) + 40.0);
  double acc = 0.0;
  for (double a = 0.0; a < upper; a += 1.0) {
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double r = a + 0.5 * (gl.nodes[i] + 1.0);
      acc += 0.5 * gl.weights[i] * phi(q * r) * chi_density(r, k);
    }
  }
  return acc;
}

}  // namespace

double gaussian_norm_expectation(const Matrix& s, const std::function<double(double)>& phi) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(linalg::symmetrize(s), Eigen::EigenvaluesOnly);
  std::vector<double> var;
  const double top = s.size() ? std::max(0.0, es.eigenvalues().maxCoeff()) : 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > 1e-12 * std::max(1.0, top)) var.push_back(es.eigenvalues()(i));

  const int k = static_cast<int>(var.size());
  if (k == 0) return phi(0.0);
  if (k == 1) return radial_integral(std::sqrt(var[0]), 1, phi);
  if (k == 2) {
    constexpr int m = 256;
    double acc = 0.0;
    for (int j = 0; j < m; ++j) {
      const double th = 2.0 * std::numbers::pi * j / m;
      const double c = std::cos(th), sn = std::sin(th);
      acc += radial_integral(std::sqrt(var[0] * c * c + var[1] * sn * sn), 2, phi);
    }
    return acc / m;
  }
  if (k == 3) {
    const Rule1D gl = gauss_legendre(48);
    constexpr int m = 96;
    double acc = 0.0;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double u = gl.nodes[i];
      const double ring = 1.0 - u * u;
      for (int j = 0; j < m; ++j) {
        const double th = 2.0 * std::numbers::pi * j / m;
        const double c = std::cos(th), sn = std::sin(th);
        const double q = std::sqrt(ring * (var[0] * c * c + var[1] * sn * sn) + var[2] * u * u);
        acc += gl.weights[i] * radial_integral(q, 3, phi);
      }
    }
    return acc / (2.0 * m);
  }
  throw ValidationError("quadrature route supports rank <= 3; use the Monte Carlo estimator");
}

MonteCarloEstimate gaussian_norm_expectation_mc(const Matrix& s, const std::function<double(double)>& phi,
                                                std::size_t samples, std::uint64_t seed) {
  const Matrix l = linalg::psd_factor(s);
  Rng rng(derive_seed(seed, {0x6e6f726dULL}));
  std::normal_distribution<double> normal;
  double mean = 0.0, m2 = 0.0;
  Vector y(l.cols());
  for (std::size_t i = 0; i < samples; ++i) {
    for (Eigen::Index j = 0; j < y.size(); ++j) y(j) = normal(rng);
    const double v = phi((l * y).norm());
    const double delta = v - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v - mean);
  }
  MonteCarloEstimate est;
  est.mean = mean;
  est.samples = samples;
  est.std_error = samples > 1 ? std::sqrt(m2 / static_cast<double>(samples - 1) / static_cast<double>(samples)) : 0.0;
  return est;
}

}  // namespace srhc
