#pragma once

/*
 * Strict (pre-)dissipativity certification.
 *
 * A problem is strictly pre-dissipative at a steady state (x_e, u_e) with
 * quadratic storage V(x) = <Px, x> + 2<w, x> and rate alpha_c * t^2 exactly
 * when two finite checks pass:
 *
 *   (1) form inequality: ||Cx||^2 - 2 eta <Ax, Px>  >=  m ||x||^2 for some
 *       eta > 0, m > 0, i.e. lambda_min(C^TC - eta(PA + A^TP)) = m > 0;
 *   (2) algebraic condition: (z + C^TC x_e, v + K^TK u_e) lies in the range
 *       of the stacked map [A^T; B^T], with minimum-norm witness w_tilde.
 *
 * From these the certificate follows constructively: normalize P by eta,
 * pick gamma = min(1, m c_K^2 / ||P||^2) / 2, set
 * alpha_c = gamma (m - gamma ||P||^2 / c_K^2) and w = w_tilde - gamma P x_e.
 * The resulting pointwise inequality
 *
 *   2<Ax + Bu, gamma P x>  <=  ||Cx||^2 + ||Ku||^2 - alpha_c ||x||^2
 *
 * is equivalent to positive semidefiniteness of one symmetric block matrix,
 * which is re-verified exactly before a certificate is returned. Storage
 * boundedness from below upgrades the verdict from pre-dissipative to
 * dissipative.
 */

#include <cstdint>
#include <string>
#include <vector>

#include "dissicert/linalg.hpp"
#include "dissicert/ocp.hpp"
#include "dissicert/storage.hpp"

namespace dissicert {

struct FormInequalityReport {
  double eta;
  double m;     // lambda_min(C^TC - eta(PA + A^TP)); may be <= 0
  bool holds;   // m > margin_tol
};

// margin_tol = kAutoTol resolves to 1e-9 * (1 + max|C^TC| + max|PA|).
FormInequalityReport form_inequality_margin(const Matrix& a, const Matrix& c,
                                            const SymmetricOperator& p,
                                            double eta,
                                            double margin_tol = kAutoTol);

struct EtaGrid {
  double lo = 0x1p-20;
  double hi = 16.0;
  int points = 25;
};

// Maximizes the margin m(eta) over a logarithmic grid, then refines by
// golden-section search on the best bracket. m(eta) is concave in eta (a
// minimum of functions affine in eta), so the refinement cannot be trapped
// at a non-global local maximum.
FormInequalityReport best_eta(const Matrix& a, const Matrix& c,
                              const SymmetricOperator& p,
                              const EtaGrid& grid = {},
                              double margin_tol = kAutoTol);

struct AlgebraicConditionResult {
  bool holds;
  Vector w_tilde;   // minimum-norm witness (least-squares solution regardless)
  double residual;
};

AlgebraicConditionResult algebraic_condition(const OcpInstance& ocp,
                                             const SteadyState& ss,
                                             double range_tol = kRangeTol);

struct ReducedInequalityResult {
  bool holds;              // exact verdict: block matrix PSD
  double min_eigenvalue;   // of the block matrix
  double worst_violation;  // most negative sampled slack (>= 0 means none)
  Vector witness_x;        // sample attaining worst_violation
  Vector witness_u;
};

// Pointwise inequality 2<Ax+Bu, Px> <= ||Cx||^2 + ||Ku||^2 - alpha_c||x||^2
// over all (x, u). The verdict is the exact eigenvalue test on
// [[C^TC - PA - A^TP - alpha_c I, -PB], [-B^TP, K^TK]]; sampling on spheres
// of radii {0.1, 1, 10} provides concrete witnesses.
ReducedInequalityResult reduced_inequality_check(const OcpInstance& ocp,
                                                 const SymmetricOperator& p,
                                                 double alpha_c,
                                                 int samples = 10000,
                                                 std::uint64_t seed = 42,
                                                 double check_tol = kAutoTol);

enum class CertificateKind : std::uint8_t {
  kStrictPreDissipative,
  kStrictDissipative,
};

struct ConditionRecord {
  std::string name;
  bool passed;
  double value;
  std::string detail;
};

struct DissipativityCertificate {
  CertificateKind kind;
  SteadyState ss;
  QuadraticStorage storage;  // final storage: P_storage = gamma eta P_input
  double gamma;              // in (0, 1]
  double eta;                // form-inequality normalization that succeeded
  double m;                  // margin of the eta-normalized form inequality
  double alpha_c;            // dissipation rate alpha(t) = alpha_c t^2
  Vector w_tilde;            // algebraic witness; w = w_tilde - gamma P x_e
  std::vector<ConditionRecord> diagnostics;
};

struct CertifierOptions {
  EtaGrid eta_grid{};
  double margin_tol = kAutoTol;
  double check_tol = kAutoTol;
  double range_tol = kRangeTol;
  double eq_tol = kEqTol;
  int reduced_samples = 10000;
  std::uint64_t seed = 42;
};

// Full certification at a user-supplied steady state and storage candidate P.
// Throws FormInequalityFailed, AlgebraicConditionFailed, IncompatibleCost,
// InvalidSteadyState; InternalVerificationFailed signals a bug.
DissipativityCertificate certify_at(const OcpInstance& ocp,
                                    const SteadyState& ss,
                                    const SymmetricOperator& p,
                                    const CertifierOptions& options = {});

// Solves the optimal steady-state problem first, then certifies there. The
// algebraic condition holds automatically at the optimizer (stationarity
// spans exactly the required range); this is asserted, not assumed.
DissipativityCertificate certify_some(const OcpInstance& ocp,
                                      const SymmetricOperator& p,
                                      const CertifierOptions& options = {});

}  // namespace dissicert
