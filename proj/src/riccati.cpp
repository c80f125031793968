#include "srhc/riccati.hpp"

#include "srhc/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace srhc {

namespace {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

void require_square(const Matrix& m, Eigen::Index n, const char* what) {
  if (m.rows() != n || m.cols() != n)
    throw DimensionError(std::string(what) + " must be " + std::to_string(n) + "x" + std::to_string(n));
}

}  // namespace

double lyapunov_residual(const Matrix& acl, const Matrix& p, const Matrix& q) {
  return (acl.transpose() * p * acl - p + q).cwiseAbs().maxCoeff();
}

Matrix solve_lyapunov(const Matrix& acl, const Matrix& q) {
  const Eigen::Index d = acl.rows();
  require_square(acl, d, "closed-loop matrix");
  require_square(q, d, "Q");
  if (!(linalg::spectral_radius(acl) < 1.0)) throw NumericalError("unstable closed loop");
  // vec(A'PA) = (A' kron A') vec(P)
  const Matrix at = acl.transpose();
  const Matrix lhs = Matrix::Identity(d * d, d * d) - kron(at, at);
  Eigen::PartialPivLU<Matrix> lu(lhs);
  const Vector qv = Eigen::Map<const Vector>(q.data(), d * d);
  Vector pv = lu.solve(qv);
  // One refinement step tightens the residual for poorly scaled inputs.
  pv += lu.solve(qv - lhs * pv);
  Matrix p = Eigen::Map<Matrix>(pv.data(), d, d);
  return linalg::symmetrize(p);
}

bool is_stabilizable(const Matrix& a, const Matrix& b) {
  const Eigen::Index d = a.rows();
  Eigen::ComplexEigenSolver<Matrix> es(a);
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff() + b.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < d; ++i) {
    const std::complex<double> lam = es.eigenvalues()(i);
    if (std::abs(lam) < 1.0 - 1e-12) continue;
    Eigen::MatrixXcd m(d, d + b.cols());
    m.leftCols(d) = a.cast<std::complex<double>>() - lam * Eigen::MatrixXcd::Identity(d, d);
    m.rightCols(b.cols()) = b.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    if (svd.singularValues()(d - 1) <= 1e-9 * scale) return false;
  }
  return true;
}

double max_isotropic_control_weight(const Matrix& k, const Matrix& q, double tol) {
  const Matrix ktk = k.transpose() * k;
  if (ktk.cwiseAbs().maxCoeff() == 0.0) return std::numeric_limits<double>::infinity();
  auto ok = [&](double r) { return linalg::min_eigenvalue(q - r * ktk) >= 0.0; };
  if (!ok(0.0)) throw ValidationError("Q is not positive semidefinite");
  double lo = 0.0;
  double hi = 1.0;
  while (ok(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw NumericalError("control weight bisection did not bracket");
  }
  while (hi - lo > tol * std::max(1.0, lo)) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

LqSynthesis synthesize_lq(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& sigma,
                          const SynthesisOptions& options) {
  const Eigen::Index d = a.rows();
  require_square(a, d, "A");
  if (b.rows() != d) throw DimensionError("B must have as many rows as A");
  require_square(q, d, "Q");
  require_square(sigma, d, "Sigma");
  if (!linalg::is_symmetric(q) || linalg::min_eigenvalue(q) <= 0.0) throw ValidationError("Q must be symmetric positive definite");
  linalg::psd_factor(sigma);
  if (!is_stabilizable(a, b)) throw ValidationError("(A, B) is not stabilizable");

  const Eigen::Index m = b.cols();
  const Matrix ri = Matrix::Identity(m, m);
  Matrix p = q;
  std::vector<double> trace;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const Matrix bp = b.transpose() * p;
    const Matrix gain = (ri + bp * b).ldlt().solve(bp * a);
    const Matrix next = linalg::symmetrize(a.transpose() * p * a - a.transpose() * p * b * gain + q);
    if (!next.allFinite()) throw NumericalError("Riccati iteration diverged at iteration " + std::to_string(it));
    const double delta = (next - p).cwiseAbs().maxCoeff();
    trace.push_back(delta);
    p = next;
    if (delta <= options.tolerance * std::max(1.0, p.cwiseAbs().maxCoeff())) break;
  }
  if (it == options.max_iterations) {
    std::ostringstream os;
    os << "Riccati iteration did not converge in " << options.max_iterations << " iterations; last updates:";
    for (std::size_t i = trace.size() > 5 ? trace.size() - 5 : 0; i < trace.size(); ++i) os << ' ' << trace[i];
    throw NumericalError(os.str());
  }

  LqSynthesis s;
  s.riccati_P = p;
  s.riccati_iterations = it + 1;
  const Matrix bp = b.transpose() * p;
  s.K_gain = -(ri + bp * b).ldlt().solve(bp * a);
  s.riccati_residual =
      (a.transpose() * p * a - a.transpose() * p * b * (ri + bp * b).ldlt().solve(bp * a) + q - p).cwiseAbs().maxCoeff();
  const Matrix acl = a + b * s.K_gain;
  s.Q = q;
  s.P = solve_lyapunov(acl, q);
  s.lyapunov_residual = lyapunov_residual(acl, s.P, q);

  s.decay_ratio = linalg::sigma_min(q) / linalg::sigma_max(s.P);
  s.lambda_circ = 1.0 - 0.5 * s.decay_ratio;
  s.lambda_circ_literal = 0.5 * (1.0 - s.decay_ratio);
  s.trace_PSigma = (s.P * sigma).trace();
  // E[V(x1)] <= (1 - s) V(x) + tr(P Sigma) <= lambda V(x) once V(x) >= 2 tr(P Sigma) / s.
  s.K_set_level = 2.0 * s.trace_PSigma / s.decay_ratio;
  s.beta = s.K_set_level * linalg::generalized_max_eigenvalue(acl.transpose() * s.P * acl, s.P) + s.trace_PSigma;

  s.r_max = max_isotropic_control_weight(s.K_gain, q);
  s.R = std::isfinite(s.r_max) ? Matrix(options.r_fraction * s.r_max * Matrix::Identity(m, m)) : Matrix(ri);
  return s;
}

FiniteHorizonLq finite_horizon_lq_value(const Matrix& a, const Matrix& b, const Matrix& q_stage,
                                        const Matrix& r_stage, const Matrix& p_terminal, const Matrix& sigma,
                                        int horizon) {
  const Eigen::Index d = a.rows();
  require_square(a, d, "A");
  if (b.rows() != d) throw DimensionError("B must have as many rows as A");
  const Eigen::Index m = b.cols();
  require_square(q_stage, d, "Q_stage");
  require_square(r_stage, m, "R_stage");
  require_square(p_terminal, d, "P_terminal");
  require_square(sigma, d, "Sigma");
  if (horizon < 1) throw ValidationError("horizon must be at least 1");

  FiniteHorizonLq out;
  out.values.resize(horizon + 1);
  out.gains.resize(horizon);
  out.values[horizon] = QuadraticValue{p_terminal, 0.0};
  for (int k = horizon - 1; k >= 0; --k) {
    const Matrix& pn = out.values[k + 1].P;
    const Matrix mm = linalg::symmetrize(r_stage + b.transpose() * pn * b);
    Eigen::SelfAdjointEigenSolver<Matrix> es(mm);
    const double scale = std::max(1.0, mm.cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() <= 1e-13 * scale)
      throw NumericalError("singular R_stage + B'PB at stage " + std::to_string(k));
    const Matrix gain = -mm.ldlt().solve(b.transpose() * pn * a);
    const Matrix acl = a + b * gain;
    // Joseph form keeps P symmetric PSD.
    const Matrix pk = linalg::symmetrize(q_stage + gain.transpose() * r_stage * gain + acl.transpose() * pn * acl);
    out.gains[k] = gain;
    out.values[k] = QuadraticValue{pk, out.values[k + 1].offset + (pn * sigma).trace()};
  }
  return out;
}

}  // namespace srhc
