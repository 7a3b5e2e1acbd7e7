#pragma once

/*
 * Optimal steady-state problem: minimize the running cost over controlled
 * equilibria, i.e. over the kernel of the n x (n+m) map [A B].
 *
 * With an orthonormal kernel basis B_k the problem reduces to the
 * unconstrained quadratic
 *
 *   min_s  s^T T s + 2 q^T s,   T = B_k^T diag(C^TC, K^TK) B_k,
 *                               q = B_k^T (z, v),
 *
 * which has the unique solution s* = -T^{-1} q when T is strictly positive.
 * The stationarity condition "projection of (z + C^TC x_e, v + K^TK u_e)
 * onto ker [A B] vanishes" is re-verified on every solve.
 */

#include "dissicert/linalg.hpp"
#include "dissicert/ocp.hpp"

namespace dissicert {

inline constexpr double kKerTol = 1e-10;  // relative to sigma_max of [A B]

struct KernelBasis {
  Matrix basis;  // (n+m) x k, orthonormal columns spanning ker [A B]
  Index k() const { return basis.cols(); }
};

KernelBasis kernel_basis(const OcpInstance& ocp, double ker_tol = kKerTol);

struct SteadyStateSolution {
  SteadyState ss;
  SymmetricOperator T_reduced;
  Vector q_reduced;
  Vector y_coord;       // reduced coordinates of the minimizer
  double optimal_cost;  // running cost at (x_e, u_e)
  double stationarity;  // ||T_reduced y_coord + q_reduced||
};

// Throws EmptyKernel when ker [A B] is trivial and NotCoercive when the
// reduced Hessian T_reduced is not strictly positive.
SteadyStateSolution solve_steady_state(const OcpInstance& ocp,
                                       double ker_tol = kKerTol);

// ||P_ker (z + C^TC x_e, v + K^TK u_e)|| with P_ker the orthogonal projection
// onto ker [A B]; zero exactly at stationary points of the reduced problem.
double stationarity_residual(const OcpInstance& ocp, const SteadyState& ss,
                             double ker_tol = kKerTol);

}  // namespace dissicert
