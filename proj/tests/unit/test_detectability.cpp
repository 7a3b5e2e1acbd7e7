#include "doctest.h"

#include <numbers>
#include <random>

#include "dissicert/certifier.hpp"
#include "dissicert/detectability.hpp"

using namespace dissicert;

namespace {

Matrix scalar(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return m;
}

Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols,
                     double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = gauss(rng);
  }
  return m;
}

Matrix random_stable(std::mt19937_64& rng, Index n) {
  const Matrix g = random_matrix(rng, n, n);
  const Matrix skew = random_matrix(rng, n, n);
  return -(g * g.transpose()) - 0.2 * Matrix::Identity(n, n) +
         0.5 * (skew - skew.transpose());
}

// Unstable block invisible from the output: never detectable.
struct UndetectablePair {
  Matrix a;
  Matrix c;
};

UndetectablePair undetectable_pair(std::mt19937_64& rng, Index n_stable) {
  const Index n = n_stable + 1;
  Matrix a = Matrix::Zero(n, n);
  a(0, 0) = 1.0;  // unstable mode
  a.bottomRightCorner(n_stable, n_stable) = random_stable(rng, n_stable);
  Matrix c = Matrix::Zero(1, n);
  for (Index j = 1; j < n; ++j) c(0, j) = 1.0;  // blind to the first mode
  return {a, c};
}

// T(eta) = C^TC + eta (K_F C + C^T K_F^T) + eta I for the returned frame.
Matrix weighted_form_matrix(const Matrix& a, const Matrix& c,
                            const DetectabilityStorage& ds) {
  const Index n = a.rows();
  const Matrix kf = ds.P.matrix() * ds.F;
  const Matrix cross = kf * c;
  return c.transpose() * c + ds.eta * (cross + cross.transpose()) +
         ds.eta * Matrix::Identity(n, n);
}

}  // namespace

TEST_CASE("exponential stability by spectral abscissa") {
  const StabilityResult damped = is_exponentially_stable(scalar(-1.0));
  CHECK(damped.stable);
  CHECK(damped.spectral_abscissa == doctest::Approx(-1.0));

  Matrix rotation(2, 2);
  rotation << 0.0, 1.0, -1.0, 0.0;
  const StabilityResult marginal = is_exponentially_stable(rotation);
  CHECK_FALSE(marginal.stable);
  CHECK(marginal.spectral_abscissa == doctest::Approx(0.0));

  Matrix heat = Matrix::Zero(2, 2);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  heat(0, 0) = -pi2;
  heat(1, 1) = -4.0 * pi2;
  CHECK(is_exponentially_stable(heat).stable);
}

TEST_CASE("normalized lyapunov solutions") {
  CHECK(solve_lyapunov(scalar(-1.0)).P.matrix()(0, 0) ==
        doctest::Approx(0.5));
  CHECK(solve_lyapunov(scalar(-2.0)).P.matrix()(0, 0) ==
        doctest::Approx(0.25));

  Matrix two = Matrix::Zero(2, 2);
  two(0, 0) = -1.0;
  two(1, 1) = -2.0;
  const LyapunovSolution sol = solve_lyapunov(two);
  CHECK(sol.P.matrix()(0, 0) == doctest::Approx(0.5));
  CHECK(sol.P.matrix()(1, 1) == doctest::Approx(0.25));
  CHECK(std::abs(sol.P.matrix()(0, 1)) <= 1e-12);
  CHECK(sol.residual <= 1e-10);

  CHECK_THROWS_AS(solve_lyapunov(scalar(1.0)), NotStable);
}

TEST_CASE("raw lyapunov solve flags a singular spectrum") {
  Matrix rotation(2, 2);
  rotation << 0.0, 1.0, -1.0, 0.0;
  CHECK_FALSE(solve_lyapunov_raw(rotation).solvable);

  const RawLyapunov fine = solve_lyapunov_raw(scalar(-0.5));
  CHECK(fine.solvable);
  CHECK(fine.p(0, 0) == doctest::Approx(1.0));
  CHECK(fine.residual <= 1e-12);
}

TEST_CASE("lyapunov solutions of random stable matrices verify the identity") {
  std::mt19937_64 rng(1717);
  for (int trial = 0; trial < 25; ++trial) {
    const Index n = 1 + static_cast<Index>(trial % 6);
    const Matrix a = random_stable(rng, n);
    const LyapunovSolution sol = solve_lyapunov(a);
    const Matrix defect = a.transpose() * sol.P.matrix() +
                          sol.P.matrix() * a + Matrix::Identity(n, n);
    CHECK(max_abs(defect) <= 1e-8 * n);
    CHECK(classify(sol.P).strictly_positive());
  }
}

TEST_CASE("stability from the relaxed lyapunov inequality") {
  CHECK(stability_from_inequality(scalar(-1.0),
                                  SymmetricOperator(scalar(0.5)), 1.0));
  CHECK_FALSE(stability_from_inequality(scalar(1.0),
                                        SymmetricOperator(scalar(0.5)), 1.0));
  // P = 0 can never witness the inequality with c > 0.
  CHECK_FALSE(stability_from_inequality(scalar(-1.0),
                                        SymmetricOperator::Zero(1), 1.0));
}

TEST_CASE("three faces of stability never disagree") {
  std::mt19937_64 rng(1818);
  std::uniform_int_distribution<int> dim(1, 6);
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = dim(rng);
    const bool make_stable = trial % 2 == 0;
    Matrix a = random_stable(rng, n);
    if (!make_stable) {
      // Shift the spectrum so the abscissa lands at +0.3.
      const double abscissa = a.eigenvalues().real().maxCoeff();
      a += (0.3 - abscissa) * Matrix::Identity(n, n);
    }
    const StabilityResult eig_face = is_exponentially_stable(a);
    if (make_stable) {
      CHECK(eig_face.stable);
      const LyapunovSolution lyap = solve_lyapunov(a);
      CHECK(stability_from_inequality(a, lyap.P, 1.0));
    } else {
      CHECK_FALSE(eig_face.stable);
      CHECK_THROWS_AS(solve_lyapunov(a), NotStable);
      const RawLyapunov raw = solve_lyapunov_raw(a);
      const SymmetricOperator p_try =
          raw.solvable ? SymmetricOperator(0.5 * (raw.p + raw.p.transpose()),
                                           1e-6)
                       : SymmetricOperator::Identity(n);
      CHECK_FALSE(stability_from_inequality(a, p_try, 1.0));
    }
  }
}

TEST_CASE("hautus detectability test") {
  CHECK(hautus_detectable(scalar(1.0), scalar(1.0)).detectable);

  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = -1.0;
  Matrix c(1, 2);
  c << 0.0, 1.0;
  const HautusResult blind = hautus_detectable(a, c);
  CHECK_FALSE(blind.detectable);
  REQUIRE(blind.worst_mode.has_value());
  CHECK(blind.worst_mode->real() == doctest::Approx(1.0));
  CHECK(blind.worst_ratio <= kRankTol);

  // Stable pairs are detectable vacuously.
  const HautusResult vacuous = hautus_detectable(scalar(-1.0), scalar(0.0));
  CHECK(vacuous.detectable);
  CHECK_FALSE(vacuous.worst_mode.has_value());
  CHECK(vacuous.worst_ratio == doctest::Approx(1.0));
}

TEST_CASE("riccati solutions on hand-checked cases") {
  // 2x - x^2 + 1 = 0 with the stabilizing root 1 + sqrt(2).
  const Matrix x1 = solve_care(scalar(1.0), scalar(1.0), scalar(1.0),
                               scalar(1.0));
  CHECK(x1(0, 0) == doctest::Approx(1.0 + std::sqrt(2.0)));

  // A = 0: X^2 = Q with B = R = I, so X = I.
  const Matrix x2 = solve_care(Matrix::Zero(3, 3), Matrix::Identity(3, 3),
                               Matrix::Identity(3, 3), Matrix::Identity(3, 3));
  CHECK(max_abs(x2 - Matrix::Identity(3, 3)) <= 1e-8);
}

TEST_CASE("detector synthesis stabilizes detectable pairs") {
  const DetectorSynthesis hard = synthesize_detector(scalar(1.0), scalar(1.0));
  CHECK(hard.stabilized_spectrum_bound <= -std::sqrt(2.0) + 1e-9);
  const StabilityResult closed =
      is_exponentially_stable(scalar(1.0) + hard.F * scalar(1.0));
  CHECK(closed.stable);

  const DetectorSynthesis easy = synthesize_detector(scalar(-1.0), scalar(1.0));
  CHECK(easy.stabilized_spectrum_bound < 0.0);

  // Unobservable but stable modes: F = 0 is produced and suffices.
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = -1.0;
  a(1, 1) = -2.0;
  const DetectorSynthesis trivial = synthesize_detector(a, Matrix::Zero(1, 2));
  CHECK(max_abs(trivial.F) <= 1e-9);
  CHECK(trivial.stabilized_spectrum_bound == doctest::Approx(-1.0));

  CHECK_THROWS_AS(synthesize_detector(scalar(1.0), scalar(0.0)),
                  NotDetectable);
}

TEST_CASE("storage from a pinned detector matches the hand computation") {
  DetectabilityOptions opts;
  opts.detector_override = scalar(-2.0);
  const DetectabilityStorage ds =
      storage_from_detectability(scalar(1.0), scalar(1.0), opts);
  // A + FC = -1, so the normalized lyapunov solution is 1/2; the weight
  // bisection stops at 1/2 and the rescaled frame eta * P is 1/4.
  CHECK(ds.P.matrix()(0, 0) == doctest::Approx(0.5));
  CHECK(ds.eta == doctest::Approx(0.5));
  CHECK(ds.m == doctest::Approx(0.5));
  CHECK(ds.eta * ds.P.matrix()(0, 0) == doctest::Approx(0.25));
  CHECK(ds.F(0, 0) == doctest::Approx(-2.0));
  // Single output eigenvalue above the split threshold: no low block.
  CHECK_FALSE(ds.schur.evaluated);
  CHECK(ds.schur.agrees);
}

TEST_CASE("storage from detectability with no output at all") {
  const DetectabilityStorage ds =
      storage_from_detectability(scalar(-1.0), scalar(0.0));
  CHECK(ds.P.matrix()(0, 0) == doctest::Approx(0.5));
  CHECK(ds.eta == doctest::Approx(1.0));
  CHECK(ds.m == doctest::Approx(1.0));
  CHECK(max_abs(ds.F) <= 1e-9);
  CHECK_FALSE(ds.schur.evaluated);  // zero operator has no spectral split
}

TEST_CASE("storage from detectability on a diagonal heat pair") {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = -pi2;
  a(1, 1) = -4.0 * pi2;
  DetectabilityOptions opts;
  opts.detector_override = Matrix::Zero(2, 2);
  const DetectabilityStorage ds =
      storage_from_detectability(a, Matrix::Identity(2, 2), opts);
  CHECK(ds.P.matrix()(0, 0) == doctest::Approx(1.0 / (2.0 * pi2)));
  CHECK(ds.P.matrix()(1, 1) == doctest::Approx(1.0 / (8.0 * pi2)));
  CHECK(ds.eta == doctest::Approx(1.0));
  CHECK(ds.m == doctest::Approx(2.0));
}

TEST_CASE("undetectable pairs are refused") {
  std::mt19937_64 rng(1919);
  const UndetectablePair pair = undetectable_pair(rng, 2);
  CHECK_FALSE(hautus_detectable(pair.a, pair.c).detectable);
  CHECK_THROWS_AS(storage_from_detectability(pair.a, pair.c), NotDetectable);
}

TEST_CASE("detectability storage satisfies the form inequality it promises") {
  std::mt19937_64 rng(2020);
  std::uniform_int_distribution<int> dim(1, 5);
  int evaluated_certificates = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = dim(rng);
    const Index p = 1 + static_cast<Index>(trial % n);
    const Matrix a = trial % 2 == 0 ? random_stable(rng, n)
                                    : Matrix(random_matrix(rng, n, n));
    const Matrix c = random_matrix(rng, p, n);
    if (!hautus_detectable(a, c).detectable) continue;

    const DetectabilityStorage ds = storage_from_detectability(a, c);
    CHECK(ds.m > 0.0);
    CHECK(ds.eta >= std::pow(2.0, -60));
    const FormInequalityReport rep =
        form_inequality_margin(a, c, ds.P, ds.eta);
    CHECK(rep.m >= ds.m - 1e-9);

    // The weighted form matrix itself is positive with margin m.
    const Matrix t = weighted_form_matrix(a, c, ds);
    const SpectralDecomposition dec = eig_sym(SymmetricOperator(t, 1e-8));
    CHECK(dec.eigenvalues(0) >= ds.m - 1e-6 * (1.0 + max_abs(t)));
    if (ds.schur.evaluated) {
      ++evaluated_certificates;
      CHECK(ds.schur.agrees);
      CHECK(ds.schur.kappa >= 1.0 - 1.0 / std::sqrt(2.0) - 1e-12);
      CHECK(ds.schur.t11_margin >= ds.eta * ds.schur.kappa - 1e-10);
      CHECK(ds.schur.dim_h1 + ds.schur.dim_h2 == n);
    }

    // Converse: the storage frame at unit weight yields a stabilizing
    // detector again.
    const SymmetricOperator rescaled(ds.eta * ds.P.matrix());
    const DetectorFromStorage back =
        detector_from_storage(a, c, rescaled, ds.m * (1.0 - 1e-12));
    CHECK(back.stable);
    CHECK(back.spectral_abscissa < 0.0);
  }
  CHECK(evaluated_certificates > 0);
}

TEST_CASE("schur certificate factorization reconstructs the form matrix") {
  // One observed and one unobserved direction force a nontrivial split of
  // the output gram spectrum.
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = -2.0;
  Matrix c(1, 2);
  c << 1.0, 0.0;
  const DetectabilityStorage ds = storage_from_detectability(a, c);
  REQUIRE(ds.schur.evaluated);
  CHECK(ds.schur.dim_h1 == 1);
  CHECK(ds.schur.dim_h2 == 1);
  CHECK(ds.schur.agrees);

  const Matrix t = weighted_form_matrix(a, c, ds);
  // Split basis: eigenvectors of C^TC, low spectrum first.
  const SpectralDecomposition dec =
      eig_sym(SymmetricOperator(c.transpose() * c));
  const Index k = ds.schur.dim_h1;
  const Matrix& basis = dec.eigenvectors;
  const Matrix tb = basis.transpose() * t * basis;
  const Matrix t11 = tb.topLeftCorner(k, k);
  const Matrix t12 = tb.topRightCorner(k, 2 - k);
  const Matrix t22 = tb.bottomRightCorner(2 - k, 2 - k);
  const Matrix t11_inv = t11.inverse();
  const Matrix schur_complement = t22 - t12.transpose() * t11_inv * t12;

  Matrix lower = Matrix::Identity(2, 2);
  lower.bottomLeftCorner(2 - k, k) = t12.transpose() * t11_inv;
  Matrix middle = Matrix::Zero(2, 2);
  middle.topLeftCorner(k, k) = t11;
  middle.bottomRightCorner(2 - k, 2 - k) = schur_complement;
  const Matrix rebuilt = lower * middle * lower.transpose();
  CHECK(max_abs(rebuilt - tb) <= 1e-8 * (1.0 + max_abs(tb)));

  // Certificate ingredients match the recomputation.
  CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(t11).eigenvalues()(0) >=
        ds.eta * ds.schur.kappa - 1e-10);
  CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(schur_complement)
            .eigenvalues()(0) == doctest::Approx(ds.schur.schur_margin));
}

TEST_CASE("detector recovered from a storage operator") {
  const DetectorFromStorage direct = detector_from_storage(
      scalar(-1.0), scalar(1.0), SymmetricOperator(scalar(0.5)), 2.0);
  CHECK(direct.F(0, 0) == doctest::Approx(-1.0));
  CHECK(direct.stable);
  CHECK(direct.spectral_abscissa == doctest::Approx(-2.0));

  const DetectorFromStorage no_output = detector_from_storage(
      scalar(-1.0), scalar(0.0), SymmetricOperator(scalar(0.5)), 1.0);
  CHECK(max_abs(no_output.F) <= 1e-12);
  CHECK(no_output.stable);

  // Output direction outside ran P: the construction has no mandate.
  Matrix p = Matrix::Zero(2, 2);
  p(0, 0) = 1.0;
  Matrix c(1, 2);
  c << 0.0, 1.0;
  Matrix a = -Matrix::Identity(2, 2);
  CHECK_THROWS_AS(
      detector_from_storage(a, c, SymmetricOperator(p), 1.0),
      RangeConditionFailed);
}

TEST_CASE("synthesis succeeds exactly on hautus-detectable pairs") {
  std::mt19937_64 rng(2121);
  std::uniform_int_distribution<int> dim(1, 5);
  int detectable_count = 0;
  int undetectable_count = 0;
  for (int trial = 0; trial < 30; ++trial) {
    Matrix a, c;
    if (trial % 3 == 2) {
      const UndetectablePair pair = undetectable_pair(rng, dim(rng));
      a = pair.a;
      c = pair.c;
    } else {
      const Index n = dim(rng);
      a = random_matrix(rng, n, n);
      c = random_matrix(rng, 1 + static_cast<Index>(trial % 2), n);
    }
    if (hautus_detectable(a, c).detectable) {
      ++detectable_count;
      const DetectorSynthesis syn = synthesize_detector(a, c);
      CHECK(is_exponentially_stable(a + syn.F * c).stable);
    } else {
      ++undetectable_count;
      CHECK_THROWS_AS(synthesize_detector(a, c), NotDetectable);
    }
  }
  CHECK(detectable_count > 0);
  CHECK(undetectable_count > 0);
}
