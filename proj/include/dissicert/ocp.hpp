#pragma once

/*
 * Problem data for the generalized linear-quadratic optimal control problem
 *
 *   minimize  integral of l(x, u),   l(x, u) = ||Cx||^2 + ||Ku||^2
 *                                             + 2<z, x> + 2<v, u>
 *   subject to  x' = Ax + Bu.
 *
 * The only structural assumption beyond dimensions is cost/input
 * compatibility: some c_K > 0 with ||Ku|| >= c_K ||Bu|| for every input,
 * equivalently ran B* inside ran K*. Instances verify it at construction
 * unless validation is explicitly deferred.
 */

#include "dissicert/linalg.hpp"

namespace dissicert {

inline constexpr double kEqTol = 1e-8;

class OcpInstance {
 public:
  enum class Validation { kChecked, kDeferred };

  OcpInstance(Matrix a, Matrix b, Matrix c, Matrix k, Vector z, Vector v,
              Validation validation = Validation::kChecked);

  const Matrix& A() const { return a_; }
  const Matrix& B() const { return b_; }
  const Matrix& C() const { return c_; }
  const Matrix& K() const { return k_; }
  const Vector& z() const { return z_; }
  const Vector& v() const { return v_; }

  Index state_dim() const { return a_.rows(); }
  Index input_dim() const { return b_.cols(); }
  Index output_dim() const { return c_.rows(); }
  Index penalty_dim() const { return k_.rows(); }

  // Cached Gram matrices C^T C and K^T K.
  const Matrix& CtC() const { return ctc_; }
  const Matrix& KtK() const { return ktk_; }

 private:
  Matrix a_, b_, c_, k_;
  Vector z_, v_;
  Matrix ctc_, ktk_;
};

struct SteadyState {
  Vector x_e;
  Vector u_e;
};

// ||A x_e + B u_e||.
double equilibrium_residual(const OcpInstance& ocp, const SteadyState& ss);

// Residual within eq_tol x (1 + ||x_e|| + ||u_e||)?
bool is_steady_state(const OcpInstance& ocp, const SteadyState& ss,
                     double eq_tol = kEqTol);

double running_cost(const OcpInstance& ocp, const Vector& x, const Vector& u);

// Cost of the problem re-centered at the steady state, evaluated at
// deviations (x, u): ||Cx||^2 + ||Ku||^2 + 2<z + C^TC x_e, x>
// + 2<v + K^TK u_e, u>. Equals l(x + x_e, u + u_e) - l(x_e, u_e).
double rotated_cost(const OcpInstance& ocp, const SteadyState& ss,
                    const Vector& x, const Vector& u);

struct CompatibilityResult {
  double c_k;             // +infinity when B = 0 (inequality is vacuous)
  bool holds;             // c_k > 0 and ran B* inside ran K*
  double range_residual;  // from the ran B* inside ran K* test
};

// Largest c with ||Ku|| >= c ||Bu|| for all u. Exact on the complement of
// ker B: kernel directions of B that still lower ||Ku|| are eliminated by a
// Schur complement before the generalized eigenvalue problem, so the value
// matches the sampled infimum and not just the pencil restricted to the
// positive eigenspace of B^T B.
CompatibilityResult compatibility_constant(const OcpInstance& ocp,
                                           double pencil_tol = kAutoTol,
                                           double range_tol = kRangeTol);

}  // namespace dissicert
