#include "dissicert/steady_state.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace dissicert {

namespace {

Matrix stacked_pencil(const OcpInstance& ocp) {
  Matrix ab(ocp.state_dim(), ocp.state_dim() + ocp.input_dim());
  ab << ocp.A(), ocp.B();
  return ab;
}

Vector stacked_linear_term(const OcpInstance& ocp) {
  Vector zv(ocp.state_dim() + ocp.input_dim());
  zv << ocp.z(), ocp.v();
  return zv;
}

}  // namespace

KernelBasis kernel_basis(const OcpInstance& ocp, double ker_tol) {
  const Matrix ab = stacked_pencil(ocp);
  const Index cols = ab.cols();
  Eigen::JacobiSVD<Matrix> svd(ab, Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  const double sigma_max = sv.size() > 0 ? sv(0) : 0.0;
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > ker_tol * sigma_max) ++rank;
  }
  KernelBasis kb{svd.matrixV().rightCols(cols - rank)};

  const double defect = max_abs(ab * kb.basis);
  if (defect > 10.0 * std::max(ker_tol * sigma_max, 1e-14)) {
    throw CheckFailed("kernel basis does not annihilate [A B]", defect);
  }
  return kb;
}

SteadyStateSolution solve_steady_state(const OcpInstance& ocp, double ker_tol) {
  const KernelBasis kb = kernel_basis(ocp, ker_tol);
  const Index n = ocp.state_dim();
  const Index m = ocp.input_dim();
  const Index k = kb.k();
  if (k == 0) {
    throw EmptyKernel("no controlled equilibria: ker [A B] is trivial");
  }

  Matrix gram = Matrix::Zero(n + m, n + m);
  gram.topLeftCorner(n, n) = ocp.CtC();
  gram.bottomRightCorner(m, m) = ocp.KtK();

  SymmetricOperator t_reduced(Matrix(kb.basis.transpose() * gram * kb.basis));
  const Vector q_reduced = kb.basis.transpose() * stacked_linear_term(ocp);

  const PositivityClass cls = classify(t_reduced);
  if (!cls.strictly_positive()) {
    std::ostringstream os;
    os << "reduced steady-state Hessian is not strictly positive: min "
          "eigenvalue "
       << cls.min_eigenvalue;
    throw NotCoercive(os.str(), cls.min_eigenvalue);
  }

  const Vector y_coord = t_reduced.matrix().ldlt().solve(Vector(-q_reduced));
  const Vector y = kb.basis * y_coord;

  SteadyStateSolution sol{SteadyState{y.head(n), y.tail(m)},
                          t_reduced,
                          q_reduced,
                          y_coord,
                          0.0,
                          0.0};
  sol.optimal_cost = running_cost(ocp, sol.ss.x_e, sol.ss.u_e);
  sol.stationarity = (t_reduced.matrix() * y_coord + q_reduced).norm();

  const double scale = 1.0 + q_reduced.norm() + max_abs(t_reduced.matrix());
  if (sol.stationarity > 1e-8 * scale) {
    throw CheckFailed("steady-state stationarity residual out of tolerance",
                      sol.stationarity);
  }
  if (!is_steady_state(ocp, sol.ss)) {
    throw CheckFailed("computed steady state violates A x_e + B u_e = 0",
                      equilibrium_residual(ocp, sol.ss));
  }
  return sol;
}

double stationarity_residual(const OcpInstance& ocp, const SteadyState& ss,
                             double ker_tol) {
  if (ss.x_e.size() != ocp.state_dim() || ss.u_e.size() != ocp.input_dim()) {
    throw DimensionError("steady state dimensions do not match the instance");
  }
  const KernelBasis kb = kernel_basis(ocp, ker_tol);
  Vector shifted(ocp.state_dim() + ocp.input_dim());
  shifted << ocp.z() + ocp.CtC() * ss.x_e, ocp.v() + ocp.KtK() * ss.u_e;
  return (kb.basis.transpose() * shifted).norm();
}

}  // namespace dissicert
