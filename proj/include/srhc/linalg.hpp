#pragma once

#include "srhc/types.hpp"

#include <functional>

namespace srhc::linalg {

double spectral_radius(const Matrix& m);

bool is_symmetric(const Matrix& m, double tol = 1e-10);

// Smallest eigenvalue of the symmetric part of m.
double min_eigenvalue(const Matrix& m);
double max_eigenvalue(const Matrix& m);

double sigma_min(const Matrix& m);
double sigma_max(const Matrix& m);

// Returns L with L*L^T = sigma. Throws ValidationError if sigma is not
// symmetric positive semidefinite (tolerance relative to its scale).
Matrix psd_factor(const Matrix& sigma);

bool is_psd(const Matrix& m, double tol = 1e-10);

std::ptrdiff_t rank(const Matrix& m, double tol = 1e-10);

Matrix pseudo_inverse(const Matrix& m);

// Extreme generalized eigenvalues of the symmetric pencil (m, p), p SPD:
// max/min of x'mx over {x'px = 1}.
double generalized_max_eigenvalue(const Matrix& m, const Matrix& p);
double generalized_min_eigenvalue(const Matrix& m, const Matrix& p);

Matrix symmetrize(const Matrix& m);

// Symmetric M with f(x) = x'Mx, recovered by polarization; f must be a
// quadratic form.
Matrix quadratic_form_matrix(Eigen::Index n, const std::function<double(const Vector&)>& f);

}  // namespace srhc::linalg
