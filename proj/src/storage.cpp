#include "dissicert/storage.hpp"

#include <cmath>

namespace dissicert {

namespace {

void check_dim(const QuadraticStorage& v, const Vector& x) {
  if (x.size() != v.P.dim() || v.w.size() != v.P.dim()) {
    throw DimensionError("storage argument does not match P's dimension");
  }
}

// Component of w inside ker P (eigenvalues within pos_tol of zero). Nonzero
// exactly when P >= 0 but w escapes ran P = (ker P)^perp.
Vector kernel_component(const SpectralDecomposition& dec, const Vector& w,
                        double pos_tol) {
  Vector w1 = Vector::Zero(w.size());
  for (Index i = 0; i < dec.eigenvalues.size(); ++i) {
    if (std::abs(dec.eigenvalues(i)) <= pos_tol) {
      w1 += dec.eigenvectors.col(i).dot(w) * dec.eigenvectors.col(i);
    }
  }
  return w1;
}

}  // namespace

double evaluate(const QuadraticStorage& v, const Vector& x) {
  check_dim(v, x);
  return x.dot(v.P.matrix() * x) + 2.0 * v.w.dot(x);
}

double derivative_pairing(const QuadraticStorage& v, const Vector& x,
                          const Vector& h) {
  check_dim(v, x);
  if (h.size() != v.P.dim()) {
    throw DimensionError("direction does not match P's dimension");
  }
  return 2.0 * h.dot(v.P.matrix() * x + v.w);
}

BoundedBelowResult bounded_below(const QuadraticStorage& v, double pos_tol,
                                 double range_tol) {
  check_dim(v, Vector::Zero(v.P.dim()));
  BoundedBelowResult result{};

  const PositivityClass cls = classify(v.P, pos_tol);
  if (!cls.non_negative()) {
    // Indefinite P: any eigenvector with negative eigenvalue is a descent ray.
    const SpectralDecomposition dec = eig_sym(v.P);
    Vector d = dec.eigenvectors.col(0);
    if (2.0 * v.w.dot(d) > 0.0) d = -d;  // point the linear term downhill too
    result.bounded = false;
    result.descent_ray = d;
    result.contained_via_sqrt = false;
    result.contained_via_p = false;
    return result;
  }

  const SymmetricOperator root = sqrt_psd(v.P, pos_tol);
  const RangeInclusion via_sqrt = range_inclusion(v.w, root.matrix(), range_tol);
  const RangeInclusion via_p = range_inclusion(v.w, v.P.matrix(), range_tol);
  result.contained_via_sqrt = via_sqrt.contained;
  result.contained_via_p = via_p.contained;
  result.bounded = via_sqrt.contained;

  if (result.bounded) {
    const Vector witness = via_sqrt.witness.col(0);
    result.witness_v = witness;
    result.lower_bound = -witness.squaredNorm();
  } else {
    // P >= 0 but w has a kernel component w1; V(-t w1) = -2t||w1||^2 + O(tol).
    const Vector w1 = kernel_component(eig_sym(v.P), v.w, cls.pos_tol);
    result.descent_ray = Vector(-w1);
  }
  return result;
}

MinimizerResult minimizer_set(const QuadraticStorage& v, double pos_tol,
                              double range_tol) {
  check_dim(v, Vector::Zero(v.P.dim()));
  MinimizerResult result{};

  const PositivityClass cls = classify(v.P, pos_tol);
  const SpectralDecomposition dec = eig_sym(v.P);
  Index kdim = 0;
  for (Index i = 0; i < dec.eigenvalues.size(); ++i) {
    if (std::abs(dec.eigenvalues(i)) <= cls.pos_tol) ++kdim;
  }
  result.kernel_basis = Matrix(v.P.dim(), kdim);
  Index col = 0;
  for (Index i = 0; i < dec.eigenvalues.size(); ++i) {
    if (std::abs(dec.eigenvalues(i)) <= cls.pos_tol) {
      result.kernel_basis.col(col++) = dec.eigenvectors.col(i);
    }
  }

  if (!cls.non_negative()) {
    result.exists = false;
    return result;
  }
  const RangeInclusion inc =
      range_inclusion(Vector(-v.w), v.P.matrix(), range_tol);
  result.exists = inc.contained;
  if (inc.contained) result.representative = Vector(inc.witness.col(0));
  return result;
}

bool cost_bounded_below(const OcpInstance& ocp, double range_tol) {
  return range_inclusion(ocp.z(), Matrix(ocp.C().transpose()), range_tol)
             .contained &&
         range_inclusion(ocp.v(), Matrix(ocp.K().transpose()), range_tol)
             .contained;
}

}  // namespace dissicert
