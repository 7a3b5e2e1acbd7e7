#pragma once

/*
 * Spectral primitives for self-adjoint operators on R^n.
 *
 * Everything downstream (storage functions, certificates, detectability)
 * reduces to a handful of questions about symmetric matrices:
 *
 *   - eigenstructure and positivity class,
 *   - PSD square roots,
 *   - spectral projections E(Delta) onto closed intervals,
 *   - range membership with a minimum-norm witness.
 *
 * Rank and range decisions are centralized here so every caller applies the
 * same relative cutoffs instead of inventing its own.
 */

#include <Eigen/Dense>

#include <cstdint>
#include <limits>

#include "dissicert/errors.hpp"

namespace dissicert {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Default tolerances. All scale-dependent ones are resolved relative to the
// operand; pass kAutoTol to request that resolution explicitly.
inline constexpr double kAutoTol = -1.0;
inline constexpr double kSymTolRel = 1e-10;       // asymmetry, x (1+max|entry|)
inline constexpr double kPosTolRel = 1e-9;        // eigenvalue sign, x (1+max|entry|)
inline constexpr double kRangeTol = 1e-8;         // singular value cutoff, relative
inline constexpr double kBoundaryTol = 1e-12;     // closed-interval membership
inline constexpr double kFormSampleTol = 1e-10;   // sampled quadratic form bounds

// Largest absolute entry; 0 for an empty matrix.
double max_abs(const Matrix& m);

// Largest singular value; 0 for an empty matrix.
double spectral_norm(const Matrix& m);

// Square matrix that is symmetric up to a relative tolerance. Construction
// symmetrizes via (M + M^T)/2, so downstream code may rely on exact symmetry.
class SymmetricOperator {
 public:
  explicit SymmetricOperator(const Matrix& m, double sym_tol_rel = kSymTolRel);

  static SymmetricOperator Zero(Index n);
  static SymmetricOperator Identity(Index n);
  static SymmetricOperator Diagonal(const Vector& d);

  const Matrix& matrix() const { return m_; }
  Index dim() const { return m_.rows(); }
  double asymmetry() const { return asymmetry_; }

 private:
  Matrix m_;
  double asymmetry_;  // max|M - M^T| of the input, before symmetrization
};

// Eigenvalues ascending, eigenvector columns orthonormal.
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;
};

SpectralDecomposition eig_sym(const SymmetricOperator& m);

enum class Positivity : std::uint8_t {
  kStrictlyPositive,
  kNonNegative,
  kIndefinite,
};

struct PositivityClass {
  Positivity kind;
  double min_eigenvalue;
  double pos_tol;  // resolved threshold the verdict used

  bool strictly_positive() const { return kind == Positivity::kStrictlyPositive; }
  bool non_negative() const { return kind != Positivity::kIndefinite; }
};

// pos_tol = kAutoTol resolves to kPosTolRel * (1 + max|entry|).
PositivityClass classify(const SymmetricOperator& m, double pos_tol = kAutoTol);

// Unique PSD square root. Eigenvalues in [-pos_tol, pos_tol] are clamped to
// zero (sqrt would amplify roundoff to sqrt(eps) scale and corrupt rank
// decisions); anything below -pos_tol raises NotPsd.
SymmetricOperator sqrt_psd(const SymmetricOperator& m, double pos_tol = kAutoTol);

// Closed interval [lo, hi] on the real line.
struct Interval {
  double lo;
  double hi;
};

// Orthogonal projector onto the span of eigenvectors with eigenvalue in
// [lo - boundary_tol, hi + boundary_tol]. This is the spectral measure
// E([lo, hi]) of the operator.
SymmetricOperator spectral_projection(const SymmetricOperator& m, Interval delta,
                                      double boundary_tol = kBoundaryTol);

struct RangeInclusion {
  bool contained;
  Matrix witness;   // minimum-norm preimages, one column per target column
  double residual;  // worst relative residual ||M w - t|| / ||t|| over columns
};

// Does ran(target) lie inside ran(m)? Rank decisions use a singular value
// cutoff of range_tol x sigma_max; containment requires the relative
// residual of the least-squares preimage to stay within range_tol.
RangeInclusion range_inclusion(const Matrix& target, const Matrix& m,
                               double range_tol = kRangeTol);
RangeInclusion range_inclusion(const Vector& target, const Matrix& m,
                               double range_tol = kRangeTol);

// Moore-Penrose inverse of a PSD operator, inverting eigenvalues above a
// relative cutoff and zeroing the rest.
Matrix pinv_psd(const SymmetricOperator& m, double rel_cut = kRangeTol);

struct SpectralCheckReport {
  bool range_part_checked;   // false when 0 lies in delta
  double max_range_residual; // part (a): worst preimage residual over samples
  double max_form_excess;    // part (b): worst <Mx,x> - r over unit samples
  int samples;
};

// Randomized verification of two spectral-measure facts used throughout:
//   (a) for a closed interval delta with 0 outside it, E(delta)H lies in
//       ran(M);
//   (b) for unit x in ran E([-r, r]), <Mx, x> <= r + kFormSampleTol.
// Throws CheckFailed on the first violated sample.
SpectralCheckReport spectral_measure_checks(const SymmetricOperator& m, Interval delta,
                                            double r, std::uint64_t seed = 0,
                                            int samples = 32,
                                            double range_tol = kRangeTol);

}  // namespace dissicert
