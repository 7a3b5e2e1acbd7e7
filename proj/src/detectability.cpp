#include "dissicert/detectability.hpp"

#include "dissicert/certifier.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace dissicert {

namespace {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() < 1) {
    std::ostringstream os;
    os << what << " must be square and non-empty, got " << a.rows() << "x"
       << a.cols();
    throw DimensionError(os.str());
  }
}

}  // namespace

StabilityResult is_exponentially_stable(const Matrix& a, double stab_tol) {
  require_square(a, "stability operand");
  Eigen::EigenSolver<Matrix> solver(a, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceFailure("eigensolver did not converge on the drift matrix");
  }
  const double abscissa = solver.eigenvalues().real().maxCoeff();
  return StabilityResult{abscissa < -stab_tol, abscissa};
}

RawLyapunov solve_lyapunov_raw(const Matrix& a) {
  require_square(a, "Lyapunov operand");
  const Index n = a.rows();

  // Bartels-Stewart on the complex Schur form: with A = V S V^H the
  // equation A^T P + P A = -I becomes S^H Y + Y S = -I for Y = V^H P V,
  // solvable column by column since S^H + S_kk I is lower triangular.
  Eigen::ComplexSchur<Matrix> schur(a);
  if (schur.info() != Eigen::Success) {
    throw ConvergenceFailure("complex Schur decomposition did not converge");
  }
  const CMatrix& s = schur.matrixT();
  const CMatrix& v = schur.matrixU();
  const CMatrix sh = s.adjoint();

  const double diag_scale = 1.0 + s.diagonal().cwiseAbs().maxCoeff();
  CMatrix y(n, n);
  for (Index k = 0; k < n; ++k) {
    for (Index i = 0; i < n; ++i) {
      if (std::abs(sh(i, i) + s(k, k)) < 1e-13 * diag_scale) {
        return RawLyapunov{false, Matrix(), 0.0};  // lambda_i + conj(lambda_j) = 0
      }
    }
    CVector rhs = -CMatrix::Identity(n, n).col(k);
    for (Index j = 0; j < k; ++j) rhs -= s(j, k) * y.col(j);
    CMatrix lower = sh;
    lower.diagonal().array() += s(k, k);
    y.col(k) = lower.triangularView<Eigen::Lower>().solve(rhs);
  }

  const CMatrix p_c = v * y * v.adjoint();
  const Matrix p = 0.5 * (p_c.real() + p_c.real().transpose());
  const double residual =
      max_abs(a.transpose() * p + p * a + Matrix::Identity(n, n));
  return RawLyapunov{true, p, residual};
}

LyapunovSolution solve_lyapunov(const Matrix& a_stable, double stab_tol,
                                double lyap_tol) {
  const StabilityResult st = is_exponentially_stable(a_stable, stab_tol);
  if (!st.stable) {
    std::ostringstream os;
    os << "Lyapunov solve requires an exponentially stable matrix; spectral "
          "abscissa "
       << st.spectral_abscissa;
    throw NotStable(os.str(), st.spectral_abscissa);
  }
  const RawLyapunov raw = solve_lyapunov_raw(a_stable);
  if (!raw.solvable) {
    throw ConvergenceFailure("Lyapunov equation is singular for a stable matrix");
  }
  const double tol =
      lyap_tol >= 0.0 ? lyap_tol : 1e-8 * static_cast<double>(a_stable.rows());
  if (raw.residual > tol) {
    throw CheckFailed("Lyapunov residual out of tolerance", raw.residual);
  }
  SymmetricOperator p(raw.p);
  const PositivityClass cls = classify(p);
  if (!cls.strictly_positive()) {
    throw CheckFailed(
        "Lyapunov solution of a stable matrix is not strictly positive",
        cls.min_eigenvalue);
  }
  return LyapunovSolution{p, raw.residual};
}

bool stability_from_inequality(const Matrix& a, const SymmetricOperator& p,
                               double c, double tol) {
  require_square(a, "stability operand");
  if (p.dim() != a.rows()) {
    throw DimensionError("P does not match the drift matrix dimension");
  }
  if (!(c > 0.0)) throw Error("decay constant c must be positive");
  if (!classify(p).non_negative()) return false;  // not a valid witness

  const Matrix g = a.transpose() * p.matrix() + p.matrix() * a;
  const double lambda_max =
      eig_sym(SymmetricOperator(g)).eigenvalues.maxCoeff();
  const double resolved = tol >= 0.0 ? tol : 1e-9 * (1.0 + max_abs(g) + c);
  const bool holds = lambda_max + c <= resolved;
  if (holds) {
    // The inequality implies exponential stability; verify instead of trust.
    const StabilityResult st = is_exponentially_stable(a, 0.0);
    if (!(st.spectral_abscissa < 0.0)) {
      throw CheckFailed(
          "Lyapunov inequality held but the spectrum is not strictly stable",
          st.spectral_abscissa);
    }
  }
  return holds;
}

HautusResult hautus_detectable(const Matrix& a, const Matrix& c,
                               double stab_tol, double rank_tol) {
  require_square(a, "drift matrix");
  const Index n = a.rows();
  if (c.cols() != n || c.rows() < 1) {
    throw DimensionError("output matrix does not match the state dimension");
  }
  Eigen::EigenSolver<Matrix> solver(a, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceFailure("eigensolver did not converge on the drift matrix");
  }

  HautusResult result{true, std::nullopt, 1.0};
  const CMatrix a_c = a.cast<std::complex<double>>();
  const CMatrix c_c = c.cast<std::complex<double>>();
  for (Index i = 0; i < n; ++i) {
    const std::complex<double> lam = solver.eigenvalues()(i);
    if (lam.real() < -stab_tol) continue;
    CMatrix stacked(n + c.rows(), n);
    stacked << lam * CMatrix::Identity(n, n) - a_c, c_c;
    Eigen::JacobiSVD<CMatrix> svd(stacked);
    const double sigma_max = svd.singularValues()(0);
    const double sigma_min = svd.singularValues()(n - 1);
    const double ratio = sigma_max > 0.0 ? sigma_min / sigma_max : 0.0;
    if (ratio < result.worst_ratio) {
      result.worst_ratio = ratio;
      result.worst_mode = lam;
    }
    if (sigma_min <= rank_tol * sigma_max) result.detectable = false;
  }
  return result;
}

Matrix solve_care(const Matrix& a, const Matrix& b, const Matrix& q,
                  const Matrix& r) {
  require_square(a, "Riccati drift");
  const Index n = a.rows();
  if (b.rows() != n || q.rows() != n || q.cols() != n || r.rows() != b.cols() ||
      r.cols() != b.cols()) {
    throw DimensionError("Riccati operand dimensions are inconsistent");
  }
  Eigen::LLT<Matrix> r_llt(r);
  if (r_llt.info() != Eigen::Success) {
    throw Error("Riccati weight R must be positive definite");
  }
  const Matrix brb = b * r_llt.solve(b.transpose());

  Matrix h(2 * n, 2 * n);
  h << a, brb, q, -a.transpose();

  // Matrix sign iteration with determinant scaling. sign(H) exists because a
  // stabilizing solution keeps the Hamiltonian spectrum off the imaginary
  // axis; a singular iterate signals the contrary.
  Matrix z = h;
  const double size = static_cast<double>(2 * n);
  bool converged = false;
  for (int it = 0; it < 200; ++it) {
    Eigen::PartialPivLU<Matrix> lu(z);
    const double det = lu.determinant();
    if (!std::isfinite(det) || det == 0.0) {
      throw ConvergenceFailure("Hamiltonian sign iteration hit a singular iterate");
    }
    const double ck = std::pow(std::abs(det), -1.0 / size);
    const Matrix z_next = 0.5 * (ck * z + (1.0 / ck) * lu.inverse());
    const double step = (z_next - z).norm() / std::max(1.0, z_next.norm());
    z = z_next;
    if (step < 1e-12) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw ConvergenceFailure("Hamiltonian sign iteration did not converge");
  }

  Matrix lhs(2 * n, n);
  Matrix rhs(2 * n, n);
  lhs << z.topRightCorner(n, n), z.bottomRightCorner(n, n) + Matrix::Identity(n, n);
  rhs << z.topLeftCorner(n, n) + Matrix::Identity(n, n), z.bottomLeftCorner(n, n);
  Matrix x = Eigen::JacobiSVD<Matrix>(lhs, Eigen::ComputeThinU | Eigen::ComputeThinV)
                 .solve(rhs);
  x = 0.5 * (x + x.transpose()).eval();

  const Matrix residual = a.transpose() * x + x * a - x * brb * x + q;
  const double scale = 1.0 + max_abs(q) + max_abs(x * brb * x);
  if (max_abs(residual) > 1e-7 * scale) {
    throw ConvergenceFailure("Riccati residual out of tolerance");
  }
  return x;
}

DetectorSynthesis synthesize_detector(const Matrix& a, const Matrix& c,
                                      double stab_margin, double stab_tol) {
  const HautusResult h = hautus_detectable(a, c, stab_tol);
  if (!h.detectable) {
    std::ostringstream os;
    os << "pair (A, C) is not detectable";
    if (h.worst_mode) {
      os << ": unobservable mode near lambda = " << h.worst_mode->real();
      if (h.worst_mode->imag() != 0.0) os << " + " << h.worst_mode->imag() << "i";
    }
    throw NotDetectable(os.str());
  }
  const Index n = a.rows();
  const Matrix eye = Matrix::Identity(n, n);

  // Shifted synthesis pushes the closed-loop spectrum left of -alpha, but
  // unobservable modes slower than the margin cannot be moved; relax the
  // shift towards zero and keep stability as the only hard requirement.
  std::vector<double> shifts;
  for (int i = 0; i < 6; ++i) shifts.push_back(stab_margin / std::pow(2.0, i));
  shifts.push_back(0.0);
  for (const double alpha : shifts) {
    const Matrix a_shift = a + alpha * eye;
    if (alpha > 0.0 && !hautus_detectable(a_shift, c, stab_tol).detectable) {
      continue;
    }
    Matrix x;
    try {
      x = solve_care(a_shift.transpose(), c.transpose(), eye,
                     Matrix::Identity(c.rows(), c.rows()));
    } catch (const ConvergenceFailure&) {
      continue;
    } catch (const Error&) {
      continue;
    }
    const Matrix f = -x * c.transpose();
    const StabilityResult st = is_exponentially_stable(a + f * c, stab_tol);
    if (st.stable) return DetectorSynthesis{f, st.spectral_abscissa};
  }
  throw ConvergenceFailure("detector synthesis failed for a detectable pair");
}

DetectabilityStorage storage_from_detectability(
    const Matrix& a, const Matrix& c, const DetectabilityOptions& options) {
  require_square(a, "drift matrix");
  const Index n = a.rows();
  if (c.cols() != n || c.rows() < 1) {
    throw DimensionError("output matrix does not match the state dimension");
  }

  Matrix f;
  if (options.detector_override) {
    f = *options.detector_override;
    if (f.rows() != n || f.cols() != c.rows()) {
      throw DimensionError("detector override must be n x p");
    }
  } else {
    f = synthesize_detector(a, c, options.stab_margin, options.stab_tol).F;
  }

  const Matrix a_cl = a + f * c;
  const StabilityResult st = is_exponentially_stable(a_cl, options.stab_tol);
  if (!st.stable) {
    throw NotStable("detector does not stabilize A + FC", st.spectral_abscissa);
  }
  const LyapunovSolution lyap =
      solve_lyapunov(a_cl, options.stab_tol, options.lyap_tol);

  const Matrix kf = lyap.P.matrix() * f;
  const double kf_norm = spectral_norm(kf);
  const Matrix ctc = c.transpose() * c;
  const Matrix cross = kf * c;
  const Matrix eye = Matrix::Identity(n, n);

  // T(eta) = C^TC + eta(K_F C + C^T K_F^T) + eta I. Because P solves the
  // closed-loop Lyapunov identity, T(eta) equals the form-inequality matrix
  // C^TC - eta(PA + A^TP) up to the Lyapunov residual.
  const double bis_tol = 1e-12 * (1.0 + max_abs(ctc));
  double eta = 1.0;
  double t_min = 0.0;
  int halvings = 0;
  Matrix t_mat;
  for (;;) {
    t_mat = ctc + eta * (cross + cross.transpose()) + eta * eye;
    t_min = eig_sym(SymmetricOperator(t_mat)).eigenvalues(0);
    if (t_min > bis_tol) break;
    if (++halvings > 60) {
      throw BisectionExhausted(
          "weight bisection exhausted 60 halvings without a positive T");
    }
    eta *= 0.5;
  }

  const double m = form_inequality_margin(a, c, lyap.P, eta).m;
  if (std::abs(m - t_min) > 1e-6 * (1.0 + max_abs(ctc))) {
    throw CheckFailed(
        "form margin and Lyapunov-identity margin diverged beyond the "
        "residual budget",
        std::abs(m - t_min));
  }

  SchurCertificate cert{};
  cert.eta = eta;
  const SpectralDecomposition dec_c = eig_sym(SymmetricOperator(ctc));
  const double lam_bar = dec_c.eigenvalues(n - 1);
  double eps = std::numeric_limits<double>::infinity();
  if (kf_norm > 0.0) eps = 1.0 / (8.0 * kf_norm * kf_norm);
  if (lam_bar > 0.0) eps = std::min(eps, 0.5 * lam_bar);

  if (!std::isfinite(eps)) {
    // C = 0 with K_F = 0: no spectral split exists; the direct verdict
    // already decided positivity.
    cert.evaluated = false;
    cert.agrees = true;
  } else {
    cert.eps = eps;
    cert.kappa = 1.0 - 2.0 * kf_norm * std::sqrt(eps);
    std::vector<Index> low, high;
    for (Index i = 0; i < n; ++i) {
      (dec_c.eigenvalues(i) <= eps + kBoundaryTol ? low : high).push_back(i);
    }
    cert.dim_h1 = static_cast<Index>(low.size());
    cert.dim_h2 = static_cast<Index>(high.size());
    if (low.empty() || high.empty()) {
      cert.evaluated = false;
      cert.agrees = true;
    } else {
      Matrix q1(n, cert.dim_h1), q2(n, cert.dim_h2);
      for (std::size_t j = 0; j < low.size(); ++j) {
        q1.col(static_cast<Index>(j)) = dec_c.eigenvectors.col(low[j]);
      }
      for (std::size_t j = 0; j < high.size(); ++j) {
        q2.col(static_cast<Index>(j)) = dec_c.eigenvectors.col(high[j]);
      }
      const Matrix t11 = q1.transpose() * t_mat * q1;
      const Matrix t12 = q1.transpose() * t_mat * q2;
      const Matrix t22 = q2.transpose() * t_mat * q2;
      cert.t11_margin = eig_sym(SymmetricOperator(t11)).eigenvalues(0);
      if (cert.t11_margin < eta * cert.kappa - 1e-10) {
        throw CheckFailed("low-output block margin fell below eta * kappa",
                          cert.t11_margin);
      }
      bool cert_positive = false;
      if (cert.t11_margin > 0.0) {
        const Matrix schur = t22 - t12.transpose() * t11.llt().solve(t12);
        cert.schur_margin = eig_sym(SymmetricOperator(schur)).eigenvalues(0);
        cert_positive = cert.schur_margin > 0.0;
      }
      cert.evaluated = true;
      cert.agrees = (cert_positive == (t_min > bis_tol));
    }
  }

  return DetectabilityStorage{lyap.P, eta, m, cert, f};
}

DetectorFromStorage detector_from_storage(const Matrix& a, const Matrix& c,
                                          const SymmetricOperator& p, double m,
                                          double range_tol) {
  require_square(a, "drift matrix");
  const Index n = a.rows();
  if (c.cols() != n || p.dim() != n) {
    throw DimensionError("detector operands have inconsistent dimensions");
  }
  if (!(m > 0.0)) throw Error("form margin m must be positive");
  const PositivityClass cls = classify(p);
  if (!cls.non_negative()) {
    throw NotPsd("storage operator must be positive semidefinite",
                 cls.min_eigenvalue);
  }
  const FormInequalityReport form = form_inequality_margin(a, c, p, 1.0);
  if (form.m < m - 1e-9) {
    std::ostringstream os;
    os << "form inequality margin " << form.m
       << " at unit weight is below the requested " << m;
    throw Error(os.str());
  }
  const RangeInclusion inc =
      range_inclusion(Matrix(c.transpose()), p.matrix(), range_tol);
  if (!inc.contained) {
    std::ostringstream os;
    os << "ran C^T escapes ran P (residual " << inc.residual
       << "); no conclusion available";
    throw RangeConditionFailed(os.str(), inc.residual);
  }

  const Matrix f = -0.5 * pinv_psd(p, range_tol) * c.transpose();
  const Matrix a_cl = a + f * c;
  (void)stability_from_inequality(a_cl, p, m);
  const StabilityResult st = is_exponentially_stable(a_cl);
  if (!st.stable) {
    throw CheckFailed("derived detector failed to stabilize A + FC",
                      st.spectral_abscissa);
  }
  return DetectorFromStorage{f, st.stable, st.spectral_abscissa};
}

}  // namespace dissicert
