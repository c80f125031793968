#pragma once

#include "srhc/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace srhc {

// One-dimensional rule: sum_i weights[i] * h(nodes[i]).
struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Probabilists' Gauss-Hermite rule for the standard normal density; weights
// sum to one and the rule is exact for polynomials of degree <= 2n-1.
Rule1D gauss_hermite(int n);

// Gauss-Legendre rule on [-1, 1].
Rule1D gauss_legendre(int n);

// Discrete expectation rule over noise vectors: E[h(w)] ~ sum_i weights_i h(nodes_i).
// Built either from Gaussian tensor quadrature or an equally weighted table.
class ExpectationRule {
 public:
  ExpectationRule() = default;
  ExpectationRule(std::vector<Vector> nodes, std::vector<double> weights, std::string label);

  std::size_t size() const { return nodes_.size(); }
  Eigen::Index dim() const { return nodes_.empty() ? 0 : nodes_.front().size(); }
  const std::vector<Vector>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::string& label() const { return label_; }

  template <class F>
  double expect(F&& h) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) acc += weights_[i] * h(nodes_[i]);
    return acc;
  }

 private:
  std::vector<Vector> nodes_;
  std::vector<double> weights_;
  std::string label_;
};

// Tensor Gauss-Hermite rule for N(mean, cov). Directions with zero variance
// are collapsed, so a zero covariance yields the single node `mean`.
ExpectationRule gaussian_rule(const Vector& mean, const Matrix& cov, int nodes_per_dim);

// Equal weights over the rows of a sample table.
ExpectationRule table_rule(const std::vector<Vector>& rows);

// E[h(mean + sigma * Z)] for scalar Z ~ N(0,1) by adaptive Gauss-Kronrod; used
// where h has kinks (|x|, e^{|x|}) that defeat Gauss-Hermite.
double adaptive_gaussian_expectation(double mean, double sigma, const std::function<double(double)>& h,
                                     double rel_tol = 1e-12);

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

// E[phi(||z||)] for z ~ N(0, s). For rank(s) <= 3 the expectation is split into
// a sphere average and a chi-distributed radial integral, both by quadrature.
double gaussian_norm_expectation(const Matrix& s, const std::function<double(double)>& phi);

MonteCarloEstimate gaussian_norm_expectation_mc(const Matrix& s, const std::function<double(double)>& phi,
                                                std::size_t samples, std::uint64_t seed);

std::ptrdiff_t effective_rank(const Matrix& s);

}  // namespace srhc
