#pragma once

/*
 * Quadratic storage functions V(x) = <Px, x> + 2<w, x>.
 *
 * Two facts about them drive the dissipativity machinery:
 *
 *   - V is bounded below exactly when P is non-negative and w lies in
 *     ran P^(1/2); the infimum is -||v||^2 for the minimum-norm v with
 *     P^(1/2) v = w (complete the square).
 *   - V attains a minimum exactly when additionally w lies in ran P; the
 *     minimizer set is an affine subspace x* + ker P.
 *
 * In finite dimensions ran P^(1/2) = ran P, so both tests reduce to the same
 * least-squares question. Both code paths are kept and compared: the sqrt
 * path is the verdict, the direct path guards the sqrt implementation.
 */

#include <optional>

#include "dissicert/linalg.hpp"
#include "dissicert/ocp.hpp"

namespace dissicert {

struct QuadraticStorage {
  SymmetricOperator P;
  Vector w;
};

// <Px, x> + 2<w, x>.
double evaluate(const QuadraticStorage& v, const Vector& x);

// Directional derivative V'(x)h = 2<h, Px + w>.
double derivative_pairing(const QuadraticStorage& v, const Vector& x,
                          const Vector& h);

struct BoundedBelowResult {
  bool bounded;
  std::optional<double> lower_bound;  // -||v||^2
  std::optional<Vector> witness_v;    // minimum-norm v with P^(1/2) v = w
  std::optional<Vector> descent_ray;  // d with V(t d) -> -inf when unbounded
  bool contained_via_sqrt;            // w in ran P^(1/2)
  bool contained_via_p;               // w in ran P (must agree, finite dims)
};

BoundedBelowResult bounded_below(const QuadraticStorage& v,
                                 double pos_tol = kAutoTol,
                                 double range_tol = kRangeTol);

struct MinimizerResult {
  bool exists;
  std::optional<Vector> representative;  // minimum-norm solution of Px = -w
  Matrix kernel_basis;  // orthonormal columns spanning ker P; the full
                        // minimizer set is representative + span(kernel_basis)
};

MinimizerResult minimizer_set(const QuadraticStorage& v,
                              double pos_tol = kAutoTol,
                              double range_tol = kRangeTol);

// Is the running cost itself bounded below over all of R^n x R^m? True iff
// z lies in ran C^T and v lies in ran K^T. Equivalent to bounded_below on the
// block storage (diag(C^TC, K^TK), (z, v)).
bool cost_bounded_below(const OcpInstance& ocp, double range_tol = kRangeTol);

}  // namespace dissicert
