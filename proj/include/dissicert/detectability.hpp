#pragma once

/*
 * Stability and detectability machinery.
 *
 * Three equivalent faces of exponential stability are implemented and kept
 * mutually checking: the eigenvalue test, the normalized Lyapunov identity
 * A^T P + P A = -I with P strictly positive, and the relaxed inequality
 * A^T P + P A <= -c I with P >= 0.
 *
 * Detectability of (A, C) is decided by the Hautus rank test and used two
 * ways: forward, a detector F (dual Riccati synthesis) yields a Lyapunov
 * solution P for A + FC from which a storage operator satisfying the form
 * inequality is built, with an independent Schur-complement certificate on
 * the spectral split of C^TC; backward, a storage operator P with form
 * margin m and ran C^T inside ran P yields the detector F = -P^+ C^T / 2.
 */

#include <complex>
#include <optional>

#include "dissicert/linalg.hpp"

namespace dissicert {

inline constexpr double kStabTol = 1e-9;
inline constexpr double kStabMargin = 0.1;
inline constexpr double kRankTol = 1e-10;

struct StabilityResult {
  bool stable;  // spectral abscissa < -stab_tol
  double spectral_abscissa;
};

StabilityResult is_exponentially_stable(const Matrix& a,
                                        double stab_tol = kStabTol);

// Solves A^T P + P A = -I by Bartels-Stewart on the complex Schur form,
// without any stability gate. solvable is false when the spectrum makes the
// equation singular (some lambda_i + conj(lambda_j) vanishes).
struct RawLyapunov {
  bool solvable;
  Matrix p;
  double residual;  // max|A^T P + P A + I|
};

RawLyapunov solve_lyapunov_raw(const Matrix& a);

struct LyapunovSolution {
  SymmetricOperator P;  // strictly positive
  double residual;
};

// lyap_tol = kAutoTol resolves to 1e-8 * n.
LyapunovSolution solve_lyapunov(const Matrix& a_stable,
                                double stab_tol = kStabTol,
                                double lyap_tol = kAutoTol);

// Checks lambda_max(A^T P + P A + cI) <= tol for P >= 0, c > 0. The
// inequality forces exponential stability of A; stability is verified here
// rather than assumed, so a true return certifies both.
bool stability_from_inequality(const Matrix& a, const SymmetricOperator& p,
                               double c, double tol = kAutoTol);

struct HautusResult {
  bool detectable;
  // Eigenvalue with Re >= -stab_tol minimizing sigma_min/sigma_max of
  // [lambda I - A; C]; absent when no such eigenvalue exists.
  std::optional<std::complex<double>> worst_mode;
  double worst_ratio;  // that minimal ratio; 1 when nothing was tested
};

HautusResult hautus_detectable(const Matrix& a, const Matrix& c,
                               double stab_tol = kStabTol,
                               double rank_tol = kRankTol);

// Stabilizing solution of A^T X + X A - X B R^-1 B^T X + Q = 0 via the
// matrix sign function of the Hamiltonian, with determinant scaling.
Matrix solve_care(const Matrix& a, const Matrix& b, const Matrix& q,
                  const Matrix& r);

struct DetectorSynthesis {
  Matrix F;                          // n x p output injection
  double stabilized_spectrum_bound;  // spectral abscissa of A + FC
};

// Dual filter Riccati synthesis, attempted with a spectrum shift of
// stab_margin and relaxed geometrically towards 0: unobservable modes that
// are stable but slower than the margin cannot be moved by output injection,
// so the margin is best-effort while stability itself is required.
DetectorSynthesis synthesize_detector(const Matrix& a, const Matrix& c,
                                      double stab_margin = kStabMargin,
                                      double stab_tol = kStabTol);

struct SchurCertificate {
  bool evaluated;  // false when the spectral split is degenerate
  double eps;      // split threshold, inside (0, 1/(4||K_F||^2))
  double eta;      // weight at which T(eta) was certified
  double kappa;    // 1 - 2||K_F|| sqrt(eps), positive by construction
  Index dim_h1;    // eigenvalues of C^TC in [0, eps]
  Index dim_h2;    // eigenvalues above eps
  double t11_margin;   // lambda_min of the H1 block, >= eta * kappa
  double schur_margin; // lambda_min of the second Schur complement
  bool agrees;     // certificate verdict matches the direct eigenvalue test
};

struct DetectabilityStorage {
  SymmetricOperator P;  // Lyapunov solution for A + FC, strictly positive
  double eta;           // bisection weight accepted for T(eta)
  double m;             // form-inequality margin of (A, C, P) at eta
  SchurCertificate schur;
  Matrix F;             // detector actually used
};

struct DetectabilityOptions {
  std::optional<Matrix> detector_override;
  double stab_margin = kStabMargin;
  double stab_tol = kStabTol;
  double lyap_tol = kAutoTol;
};

// Constructive forward direction: a detectable pair admits a non-negative P
// with positive form margin. Guarantees
// form_inequality_margin(A, C, P, eta).m >= m - 1e-9 by computing m from
// exactly that matrix.
DetectabilityStorage storage_from_detectability(
    const Matrix& a, const Matrix& c, const DetectabilityOptions& options = {});

struct DetectorFromStorage {
  Matrix F;
  bool stable;
  double spectral_abscissa;
};

// Converse direction: from a storage operator P >= 0 with form margin m at
// eta = 1 and ran C^T inside ran P, the injection F = -P^+ C^T / 2 makes
// A + FC exponentially stable. Throws RangeConditionFailed when the range
// hypothesis fails (no conclusion is available then).
DetectorFromStorage detector_from_storage(const Matrix& a, const Matrix& c,
                                          const SymmetricOperator& p, double m,
                                          double range_tol = kRangeTol);

}  // namespace dissicert
