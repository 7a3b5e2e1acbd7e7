#include "dissicert/ocp.hpp"

#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

namespace dissicert {

namespace {

void check_dims(const Matrix& a, const Matrix& b, const Matrix& c,
                const Matrix& k, const Vector& z, const Vector& v) {
  std::ostringstream os;
  if (a.rows() != a.cols() || a.rows() < 1) {
    os << "A must be square and non-empty, got " << a.rows() << "x" << a.cols();
    throw DimensionError(os.str());
  }
  const Index n = a.rows();
  if (b.rows() != n || b.cols() < 1) {
    os << "B must have " << n << " rows and at least one column, got "
       << b.rows() << "x" << b.cols();
    throw DimensionError(os.str());
  }
  const Index m = b.cols();
  if (c.cols() != n || c.rows() < 1) {
    os << "C must have " << n << " columns and at least one row, got "
       << c.rows() << "x" << c.cols();
    throw DimensionError(os.str());
  }
  if (k.cols() != m || k.rows() < 1) {
    os << "K must have " << m << " columns and at least one row, got "
       << k.rows() << "x" << k.cols();
    throw DimensionError(os.str());
  }
  if (z.size() != n) {
    os << "z must have length " << n << ", got " << z.size();
    throw DimensionError(os.str());
  }
  if (v.size() != m) {
    os << "v must have length " << m << ", got " << v.size();
    throw DimensionError(os.str());
  }
  for (const Matrix* mat : {&a, &b, &c, &k}) {
    if (!mat->allFinite()) throw Error("problem data contains a non-finite entry");
  }
  if (!z.allFinite() || !v.allFinite()) {
    throw Error("problem data contains a non-finite entry");
  }
}

}  // namespace

OcpInstance::OcpInstance(Matrix a, Matrix b, Matrix c, Matrix k, Vector z,
                         Vector v, Validation validation)
    : a_(std::move(a)),
      b_(std::move(b)),
      c_(std::move(c)),
      k_(std::move(k)),
      z_(std::move(z)),
      v_(std::move(v)) {
  check_dims(a_, b_, c_, k_, z_, v_);
  ctc_ = c_.transpose() * c_;
  ktk_ = k_.transpose() * k_;
  if (validation == Validation::kChecked) {
    CompatibilityResult comp = compatibility_constant(*this);
    if (!comp.holds) {
      std::ostringstream os;
      os << "cost does not dominate the input direction: c_K = " << comp.c_k
         << ", range residual " << comp.range_residual;
      throw IncompatibleCost(os.str());
    }
  }
}

double equilibrium_residual(const OcpInstance& ocp, const SteadyState& ss) {
  if (ss.x_e.size() != ocp.state_dim() || ss.u_e.size() != ocp.input_dim()) {
    throw DimensionError("steady state dimensions do not match the instance");
  }
  return (ocp.A() * ss.x_e + ocp.B() * ss.u_e).norm();
}

bool is_steady_state(const OcpInstance& ocp, const SteadyState& ss,
                     double eq_tol) {
  const double scale = 1.0 + ss.x_e.norm() + ss.u_e.norm();
  return equilibrium_residual(ocp, ss) <= eq_tol * scale;
}

double running_cost(const OcpInstance& ocp, const Vector& x, const Vector& u) {
  if (x.size() != ocp.state_dim() || u.size() != ocp.input_dim()) {
    throw DimensionError("cost arguments do not match the instance dimensions");
  }
  return (ocp.C() * x).squaredNorm() + (ocp.K() * u).squaredNorm() +
         2.0 * ocp.z().dot(x) + 2.0 * ocp.v().dot(u);
}

double rotated_cost(const OcpInstance& ocp, const SteadyState& ss,
                    const Vector& x, const Vector& u) {
  if (x.size() != ocp.state_dim() || u.size() != ocp.input_dim()) {
    throw DimensionError("cost arguments do not match the instance dimensions");
  }
  // Cost of the problem shifted to the steady state; x and u are deviations.
  // Satisfies rotated(x, u) = l(x + x_e, u + u_e) - l(x_e, u_e).
  const Vector z_shift = ocp.z() + ocp.CtC() * ss.x_e;
  const Vector v_shift = ocp.v() + ocp.KtK() * ss.u_e;
  return (ocp.C() * x).squaredNorm() + (ocp.K() * u).squaredNorm() +
         2.0 * z_shift.dot(x) + 2.0 * v_shift.dot(u);
}

CompatibilityResult compatibility_constant(const OcpInstance& ocp,
                                           double pencil_tol, double range_tol) {
  const Index m = ocp.input_dim();
  const Matrix btb = ocp.B().transpose() * ocp.B();
  const Matrix& ktk = ocp.KtK();
  if (pencil_tol < 0.0) {
    pencil_tol = 1e-10 * btb.trace() / static_cast<double>(m);
  }

  RangeInclusion inc = range_inclusion(Matrix(ocp.B().transpose()),
                                       Matrix(ocp.K().transpose()), range_tol);

  SpectralDecomposition dec = eig_sym(SymmetricOperator(btb));
  std::vector<Index> pos;
  std::vector<Index> null;
  for (Index i = 0; i < m; ++i) {
    (dec.eigenvalues(i) > pencil_tol ? pos : null).push_back(i);
  }

  if (pos.empty()) {
    // B vanishes; any c works and the range condition is vacuous.
    return CompatibilityResult{std::numeric_limits<double>::infinity(), true,
                               inc.residual};
  }

  Matrix v_basis(m, static_cast<Index>(pos.size()));
  Vector v_eigs(static_cast<Index>(pos.size()));
  for (std::size_t j = 0; j < pos.size(); ++j) {
    v_basis.col(static_cast<Index>(j)) = dec.eigenvectors.col(pos[j]);
    v_eigs(static_cast<Index>(j)) = dec.eigenvalues(pos[j]);
  }

  // Partially minimize ||Ku||^2 over the kernel coordinate of B before
  // forming the Rayleigh quotient, otherwise kernel directions that lower
  // ||Ku|| are ignored and c_K comes out too large.
  Matrix s = v_basis.transpose() * ktk * v_basis;
  if (!null.empty()) {
    Matrix w_basis(m, static_cast<Index>(null.size()));
    for (std::size_t j = 0; j < null.size(); ++j) {
      w_basis.col(static_cast<Index>(j)) = dec.eigenvectors.col(null[j]);
    }
    const Matrix cross = w_basis.transpose() * ktk * v_basis;
    const Matrix head = w_basis.transpose() * ktk * w_basis;
    s -= cross.transpose() * pinv_psd(SymmetricOperator(head)) * cross;
  }

  const Vector scale = v_eigs.cwiseSqrt().cwiseInverse();
  const Matrix rayleigh = scale.asDiagonal() * s * scale.asDiagonal();
  const double min_eig = eig_sym(SymmetricOperator(rayleigh)).eigenvalues(0);
  const double c_k = std::sqrt(std::max(min_eig, 0.0));
  return CompatibilityResult{c_k, inc.contained && c_k > 0.0, inc.residual};
}

}  // namespace dissicert
