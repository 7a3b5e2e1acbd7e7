#include "dissicert/linalg.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace dissicert {

namespace {

double resolve_pos_tol(const Matrix& m, double pos_tol) {
  if (pos_tol >= 0.0) return pos_tol;
  return kPosTolRel * (1.0 + max_abs(m));
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    std::ostringstream os;
    os << what << " contains a non-finite entry";
    throw Error(os.str());
  }
}

}  // namespace

double max_abs(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().maxCoeff();
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

SymmetricOperator::SymmetricOperator(const Matrix& m, double sym_tol_rel) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << "symmetric operator must be square, got " << m.rows() << "x" << m.cols();
    throw DimensionError(os.str());
  }
  require_finite(m, "symmetric operator");
  asymmetry_ = max_abs(m - m.transpose());
  // (1 + scale) keeps the test meaningful for matrices that are numerically
  // zero, where roundoff asymmetry would otherwise exceed any pure-relative
  // threshold.
  const double tol = sym_tol_rel * (1.0 + max_abs(m));
  if (asymmetry_ > tol) {
    std::ostringstream os;
    os << "matrix is not symmetric: max|M - M^T| = " << asymmetry_
       << " exceeds " << tol;
    throw SymmetryError(os.str(), asymmetry_);
  }
  m_ = 0.5 * (m + m.transpose());
}

SymmetricOperator SymmetricOperator::Zero(Index n) {
  return SymmetricOperator(Matrix::Zero(n, n));
}

SymmetricOperator SymmetricOperator::Identity(Index n) {
  return SymmetricOperator(Matrix::Identity(n, n));
}

SymmetricOperator SymmetricOperator::Diagonal(const Vector& d) {
  return SymmetricOperator(Matrix(d.asDiagonal()));
}

SpectralDecomposition eig_sym(const SymmetricOperator& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix());
  if (solver.info() != Eigen::Success) {
    throw ConvergenceFailure("symmetric eigensolver did not converge");
  }
  SpectralDecomposition dec{solver.eigenvalues(), solver.eigenvectors()};

  // Cheap self-checks at desk scale: reconstruction and orthonormality.
  const Index n = m.dim();
  const double scale = 1.0 + max_abs(m.matrix());
  const double recon = max_abs(dec.eigenvectors * dec.eigenvalues.asDiagonal() *
                                   dec.eigenvectors.transpose() -
                               m.matrix());
  if (recon > 1e-10 * scale * static_cast<double>(std::max<Index>(n, 1))) {
    throw CheckFailed("spectral decomposition does not reconstruct its operator", recon);
  }
  const double ortho = max_abs(dec.eigenvectors.transpose() * dec.eigenvectors -
                               Matrix::Identity(n, n));
  if (ortho > 1e-10) {
    throw CheckFailed("eigenvector basis is not orthonormal", ortho);
  }
  return dec;
}

PositivityClass classify(const SymmetricOperator& m, double pos_tol) {
  const double tol = resolve_pos_tol(m.matrix(), pos_tol);
  if (m.dim() == 0) {
    return PositivityClass{Positivity::kStrictlyPositive,
                           std::numeric_limits<double>::infinity(), tol};
  }
  const double min_eig = eig_sym(m).eigenvalues(0);
  Positivity kind;
  if (min_eig > tol) {
    kind = Positivity::kStrictlyPositive;
  } else if (min_eig >= -tol) {
    kind = Positivity::kNonNegative;
  } else {
    kind = Positivity::kIndefinite;
  }
  return PositivityClass{kind, min_eig, tol};
}

SymmetricOperator sqrt_psd(const SymmetricOperator& m, double pos_tol) {
  const double tol = resolve_pos_tol(m.matrix(), pos_tol);
  SpectralDecomposition dec = eig_sym(m);
  if (m.dim() > 0 && dec.eigenvalues(0) < -tol) {
    std::ostringstream os;
    os << "operator is not positive semidefinite: min eigenvalue "
       << dec.eigenvalues(0);
    throw NotPsd(os.str(), dec.eigenvalues(0));
  }
  // Zero out the whole noise band [-tol, tol], not just its negative half:
  // sqrt amplifies roundoff-sized eigenvalues to sqrt(eps) scale, which would
  // leak rank into downstream range tests.
  Vector roots = dec.eigenvalues;
  for (Index i = 0; i < roots.size(); ++i) {
    roots(i) = roots(i) <= tol ? 0.0 : std::sqrt(roots(i));
  }
  return SymmetricOperator(dec.eigenvectors * roots.asDiagonal() *
                           dec.eigenvectors.transpose());
}

SymmetricOperator spectral_projection(const SymmetricOperator& m, Interval delta,
                                      double boundary_tol) {
  if (!(delta.lo <= delta.hi)) {
    throw Error("spectral interval is empty: lo > hi");
  }
  SpectralDecomposition dec = eig_sym(m);
  const Index n = m.dim();
  Matrix proj = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const double ev = dec.eigenvalues(i);
    if (ev >= delta.lo - boundary_tol && ev <= delta.hi + boundary_tol) {
      proj.noalias() += dec.eigenvectors.col(i) * dec.eigenvectors.col(i).transpose();
    }
  }
  return SymmetricOperator(proj);
}

RangeInclusion range_inclusion(const Matrix& target, const Matrix& m,
                               double range_tol) {
  if (target.rows() != m.rows()) {
    std::ostringstream os;
    os << "range test: target has " << target.rows() << " rows, operator has "
       << m.rows();
    throw DimensionError(os.str());
  }
  require_finite(target, "range target");
  require_finite(m, "range operator");

  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(range_tol);
  RangeInclusion result;
  result.witness = svd.solve(target);
  result.residual = 0.0;
  for (Index j = 0; j < target.cols(); ++j) {
    const double denom = target.col(j).norm();
    if (denom == 0.0) continue;
    const double res = (m * result.witness.col(j) - target.col(j)).norm() / denom;
    result.residual = std::max(result.residual, res);
  }
  result.contained = result.residual <= range_tol;
  return result;
}

RangeInclusion range_inclusion(const Vector& target, const Matrix& m,
                               double range_tol) {
  return range_inclusion(Matrix(target), m, range_tol);
}

Matrix pinv_psd(const SymmetricOperator& m, double rel_cut) {
  SpectralDecomposition dec = eig_sym(m);
  const Index n = m.dim();
  if (n == 0) return Matrix(0, 0);
  const double cut = rel_cut * std::max(dec.eigenvalues.cwiseAbs().maxCoeff(), 0.0);
  Vector inv = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    if (dec.eigenvalues(i) > cut && dec.eigenvalues(i) > 0.0) {
      inv(i) = 1.0 / dec.eigenvalues(i);
    }
  }
  return dec.eigenvectors * inv.asDiagonal() * dec.eigenvectors.transpose();
}

SpectralCheckReport spectral_measure_checks(const SymmetricOperator& m, Interval delta,
                                            double r, std::uint64_t seed, int samples,
                                            double range_tol) {
  if (r < 0.0) throw Error("form bound radius r must be non-negative");
  if (samples < 1) throw Error("sample count must be positive");

  const Index n = m.dim();
  SpectralCheckReport report{};
  report.samples = samples;
  report.range_part_checked =
      delta.lo > kBoundaryTol || delta.hi < -kBoundaryTol;

  const SymmetricOperator proj_delta = spectral_projection(m, delta);
  const SymmetricOperator proj_ball =
      spectral_projection(m, Interval{-r, r});

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector g(n);
  for (int s = 0; s < samples; ++s) {
    for (Index i = 0; i < n; ++i) g(i) = gauss(rng);

    if (report.range_part_checked) {
      Vector y = proj_delta.matrix() * g;
      if (y.norm() > 1e-12) {
        RangeInclusion inc = range_inclusion(y, m.matrix(), range_tol);
        report.max_range_residual =
            std::max(report.max_range_residual, inc.residual);
        if (!inc.contained) {
          throw CheckFailed(
              "projected vector escaped the operator range (interval avoids 0)",
              inc.residual);
        }
      }
    }

    Vector x = proj_ball.matrix() * g;
    const double norm = x.norm();
    if (norm > 1e-12) {
      x /= norm;
      const double excess = x.dot(m.matrix() * x) - r;
      report.max_form_excess = std::max(report.max_form_excess, excess);
      if (excess > kFormSampleTol) {
        throw CheckFailed("quadratic form exceeded its spectral radius bound",
                          excess);
      }
    }
  }
  return report;
}

}  // namespace dissicert
