#include "srhc/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace srhc::linalg {

double spectral_radius(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double sigma_min(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  return s.size() ? s(s.size() - 1) : 0.0;
}

double sigma_max(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  return s.size() ? s(0) : 0.0;
}

bool is_psd(const Matrix& m, double tol) {
  if (!is_symmetric(m, tol)) return false;
  if (m.size() == 0) return true;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return min_eigenvalue(m) >= -tol * scale;
}

Matrix psd_factor(const Matrix& sigma) {
  if (sigma.rows() != sigma.cols()) throw ValidationError("covariance must be square");
  if (!is_symmetric(sigma)) throw ValidationError("covariance is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(sigma));
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if (sigma.size() && es.eigenvalues().minCoeff() < -1e-10 * scale) {
    throw ValidationError("covariance is not positive semidefinite (min eigenvalue " +
                          std::to_string(es.eigenvalues().minCoeff()) + ")");
  }
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

std::ptrdiff_t rank(const Matrix& m, double tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  const double cut = tol * std::max(1.0, s(0));
  std::ptrdiff_t r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cut) ++r;
  return r;
}

Matrix pseudo_inverse(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cut = 1e-12 * std::max<double>(m.rows(), m.cols()) * (s.size() ? s(0) : 0.0);
  Vector inv(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) inv(i) = s(i) > cut ? 1.0 / s(i) : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

double generalized_max_eigenvalue(const Matrix& m, const Matrix& p) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(symmetrize(m), symmetrize(p),
                                                      Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double generalized_min_eigenvalue(const Matrix& m, const Matrix& p) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(symmetrize(m), symmetrize(p),
                                                      Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Matrix quadratic_form_matrix(Eigen::Index n, const std::function<double(const Vector&)>& f) {
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector ei = Vector::Unit(n, i);
    out(i, i) = f(ei);
    for (Eigen::Index j = 0; j < i; ++j) {
      const Vector ej = Vector::Unit(n, j);
      out(i, j) = out(j, i) = 0.5 * (f(ei + ej) - f(ei) - f(ej));
    }
  }
  return out;
}

}  // namespace srhc::linalg
