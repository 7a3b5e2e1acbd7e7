#include "dissicert/trajectory.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "dissicert/storage.hpp"

namespace dissicert {

namespace {

// Exact one-step propagator for constant input over a step of length h:
// x+ = E11 x + E12 u with [E11 E12; 0 I] = exp([A B; 0 0] h).
struct StepOperator {
  Matrix e11;
  Matrix e12;

  StepOperator(const Matrix& a, const Matrix& b, double h) {
    const Index n = a.rows();
    const Index m = b.cols();
    Matrix aug = Matrix::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = a * h;
    aug.topRightCorner(n, m) = b * h;
    const Matrix e = aug.exp();
    e11 = e.topLeftCorner(n, n);
    e12 = e.topRightCorner(n, m);
  }

  Vector apply(const Vector& x, const Vector& u) const {
    return e11 * x + e12 * u;
  }
};

std::vector<double> merged_grid(const ControlSignal& u, double t_start,
                                double t_end, double dt) {
  std::vector<double> grid;
  grid.push_back(t_start);
  if (dt > 0.0) {
    for (std::size_t k = 1;; ++k) {
      const double t = t_start + static_cast<double>(k) * dt;
      if (t >= t_end) break;
      grid.push_back(t);
    }
  }
  for (double bp : u.breakpoints) {
    if (bp > t_start && bp < t_end) grid.push_back(bp);
  }
  grid.push_back(t_end);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

// Propagates x from t_start to t_end stepping exactly at every control
// breakpoint in between, so the input is constant on each step.
Vector propagate(const OcpInstance& ocp, Vector x, const ControlSignal& u,
                 double t_start, double t_end) {
  if (t_end <= t_start) return x;
  const std::vector<double> grid = merged_grid(u, t_start, t_end, 0.0);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const StepOperator step(ocp.A(), ocp.B(), grid[k + 1] - grid[k]);
    x = step.apply(x, u.value_at(grid[k]));
  }
  return x;
}

}  // namespace

void ControlSignal::validate(Index m) const {
  if (breakpoints.empty() || breakpoints.size() != values.size()) {
    throw DimensionError(
        "control signal needs matching, non-empty breakpoint and value lists");
  }
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    if (!(breakpoints[i] < breakpoints[i + 1])) {
      throw Error("control breakpoints must be strictly ascending");
    }
  }
  for (const Vector& val : values) {
    if (val.size() != m) {
      throw DimensionError("control value dimension does not match the input");
    }
  }
}

const Vector& ControlSignal::value_at(double t) const {
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
  if (it == breakpoints.begin()) return values.front();
  const auto idx = static_cast<std::size_t>(
      std::distance(breakpoints.begin(), it) - 1);
  return values[idx];
}

ControlSignal constant_control(const Vector& value, double start) {
  return ControlSignal{{start}, {value}};
}

Trajectory simulate(const OcpInstance& ocp, const Vector& x0,
                    const ControlSignal& u, double t_end, double dt) {
  if (x0.size() != ocp.state_dim()) {
    throw DimensionError("initial state dimension mismatch");
  }
  u.validate(ocp.input_dim());
  if (!(dt > 0.0) || !(t_end > 0.0)) {
    throw Error("simulate requires dt > 0 and t_end > 0");
  }

  const std::vector<double> grid = merged_grid(u, 0.0, t_end, dt);
  Trajectory traj;
  traj.x0 = x0;
  traj.times = grid;
  traj.states.reserve(grid.size());
  traj.states.push_back(x0);

  // Steps of equal length reuse one matrix exponential (the regular lattice
  // dominates the grid).
  double cached_h = -1.0;
  std::optional<StepOperator> cached;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double h = grid[k + 1] - grid[k];
    if (!cached || h != cached_h) {
      cached.emplace(ocp.A(), ocp.B(), h);
      cached_h = h;
    }
    traj.states.push_back(cached->apply(traj.states.back(), u.value_at(grid[k])));
  }
  return traj;
}

IntegralCheck integral_dissipation_check(const OcpInstance& ocp,
                                         const DissipativityCertificate& cert,
                                         const Vector& x0,
                                         const ControlSignal& u, double t1,
                                         double t2, double quad_tol) {
  if (x0.size() != ocp.state_dim()) {
    throw DimensionError("initial state dimension mismatch");
  }
  u.validate(ocp.input_dim());
  if (!(t1 >= 0.0) || !(t1 < t2)) {
    throw Error("integral check requires 0 <= t1 < t2");
  }

  const double cost_at_ss = running_cost(ocp, cert.ss.x_e, cert.ss.u_e);
  const auto integrand = [&](const Vector& x, const Vector& uval) {
    return running_cost(ocp, x, uval) - cost_at_ss -
           cert.alpha_c * (x - cert.ss.x_e).squaredNorm();
  };

  // Segment [t1, t2] at control breakpoints; within a segment the input is a
  // single vector so exact stepping and smooth integrands are available.
  const std::vector<double> edges = merged_grid(u, t1, t2, 0.0);
  std::vector<Vector> edge_states;
  edge_states.push_back(propagate(ocp, x0, u, 0.0, t1));
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const StepOperator step(ocp.A(), ocp.B(), edges[k + 1] - edges[k]);
    edge_states.push_back(
        step.apply(edge_states.back(), u.value_at(edges[k])));
  }

  IntegralCheck result;
  result.lhs =
      evaluate(cert.storage, edge_states.back()) -
      evaluate(cert.storage, edge_states.front());

  // Composite Simpson per segment, doubled until two successive totals agree.
  constexpr int kMaxLevels = 18;
  double prev = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  for (int level = 0; level < kMaxLevels; ++level) {
    const int n_sub = 2 << level;
    double total = 0.0;
    for (std::size_t seg = 0; seg + 1 < edges.size(); ++seg) {
      const double h = (edges[seg + 1] - edges[seg]) / n_sub;
      const Vector& uval = u.value_at(edges[seg]);
      const StepOperator step(ocp.A(), ocp.B(), h);
      Vector x = edge_states[seg];
      double sum = integrand(x, uval);
      for (int k = 1; k < n_sub; ++k) {
        x = step.apply(x, uval);
        sum += (k % 2 == 1 ? 4.0 : 2.0) * integrand(x, uval);
      }
      x = step.apply(x, uval);
      sum += integrand(x, uval);
      total += sum * h / 3.0;
    }
    const double resolved =
        quad_tol >= 0.0 ? quad_tol : 1e-9 * (1.0 + std::abs(total));
    if (level > 0 && std::abs(total - prev) < resolved) {
      result.rhs = total;
      result.quad_tol_used = resolved;
      converged = true;
      break;
    }
    prev = total;
  }
  if (!converged) {
    throw QuadratureNotConverged(
        "cost quadrature did not settle; dynamics too stiff for the horizon");
  }

  result.margin = result.rhs - result.lhs;
  result.holds = result.lhs <= result.rhs + 10.0 * result.quad_tol_used;
  return result;
}

DifferentialRecovery differential_recovery_check(
    const OcpInstance& ocp, const DissipativityCertificate& cert,
    const Vector& x0, const Vector& u0) {
  if (x0.size() != ocp.state_dim() || u0.size() != ocp.input_dim()) {
    throw DimensionError("differential check operand dimension mismatch");
  }

  DifferentialRecovery rec;
  const Vector drift = ocp.A() * x0 + ocp.B() * u0;
  rec.lhs = derivative_pairing(cert.storage, x0, drift);
  rec.rhs = running_cost(ocp, x0, u0) -
            running_cost(ocp, cert.ss.x_e, cert.ss.u_e) -
            cert.alpha_c * (x0 - cert.ss.x_e).squaredNorm();
  rec.holds = rec.lhs <= rec.rhs + 1e-9 * (1.0 + std::abs(rec.lhs) +
                                           std::abs(rec.rhs));

  rec.horizons = {1e-2, 1e-3, 1e-4};
  const ControlSignal u = constant_control(u0);
  for (std::size_t i = 0; i < rec.horizons.size(); ++i) {
    const double t2 = rec.horizons[i];
    const IntegralCheck chk =
        integral_dissipation_check(ocp, cert, x0, u, 0.0, t2);
    rec.scaled_gaps[i] = (chk.lhs - chk.rhs) / t2;
  }

  // The scaled gap approaches lhs - rhs linearly in t2; estimate the order
  // from the two finest horizons unless the errors are already at noise level.
  const double target = rec.lhs - rec.rhs;
  const double noise = 1e-10 * (1.0 + std::abs(rec.lhs) + std::abs(rec.rhs));
  const double e1 = std::abs(rec.scaled_gaps[1] - target);
  const double e2 = std::abs(rec.scaled_gaps[2] - target);
  if (e1 < noise || e2 < noise) {
    rec.order = std::numeric_limits<double>::quiet_NaN();
  } else {
    rec.order = std::log(e1 / e2) /
                std::log(rec.horizons[1] / rec.horizons[2]);
  }
  return rec;
}

}  // namespace dissicert
