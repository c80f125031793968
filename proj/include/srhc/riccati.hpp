#pragma once

#include "srhc/types.hpp"

#include <vector>

namespace srhc {

// V(x) = x'Px + offset.
struct QuadraticValue {
  Matrix P;
  double offset = 0.0;

  double operator()(const Vector& x) const { return x.dot(P * x) + offset; }
};

// Example-1 style synthesis for x+ = Ax + Bu + w: a stabilizing gain, its
// Lyapunov matrix, a control weight R with K'RK <= Q, and the geometric drift
// constants of V(x) = x'Px for the closed loop under u = Kx.
struct LqSynthesis {
  Matrix K_gain;
  Matrix P;
  Matrix Q;
  Matrix R;
  Matrix riccati_P;  // converged DARE solution used to build K_gain
  double lambda_circ = 0.0;
  double lambda_circ_literal = 0.0;  // 0.5 * (1 - s), see decay_ratio
  double decay_ratio = 0.0;          // s = sigma_min(Q) / sigma_max(P)
  double beta = 0.0;
  double K_set_level = 0.0;          // drift exclusion set {x'Px <= level}
  double trace_PSigma = 0.0;
  double lyapunov_residual = 0.0;
  double riccati_residual = 0.0;
  double r_max = 0.0;                // largest isotropic weight with r K'K <= Q
  int riccati_iterations = 0;
};

// Solves Acl' P Acl - P = -Q. Throws NumericalError("unstable closed loop")
// if the spectral radius of Acl is not below one.
Matrix solve_lyapunov(const Matrix& acl, const Matrix& q);

double lyapunov_residual(const Matrix& acl, const Matrix& p, const Matrix& q);

struct SynthesisOptions {
  double tolerance = 1e-12;
  int max_iterations = 100000;
  double r_fraction = 0.5;  // R = r_fraction * r_max * I
};

LqSynthesis synthesize_lq(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& sigma,
                          const SynthesisOptions& options = {});

// Popov-Belevitch-Hautus test over eigenvalues with |lambda| >= 1.
bool is_stabilizable(const Matrix& a, const Matrix& b);

// Largest r with Q - r K'K PSD, found by bisection to `tol`.
double max_isotropic_control_weight(const Matrix& k, const Matrix& q, double tol = 1e-8);

struct FiniteHorizonLq {
  std::vector<QuadraticValue> values;  // values[k]: cost-to-go at stage k, k = 0..N
  std::vector<Matrix> gains;           // gains[k]: pi_k(x) = gains[k] x, k = 0..N-1
};

FiniteHorizonLq finite_horizon_lq_value(const Matrix& a, const Matrix& b, const Matrix& q_stage,
                                        const Matrix& r_stage, const Matrix& p_terminal, const Matrix& sigma,
                                        int horizon);

}  // namespace srhc
