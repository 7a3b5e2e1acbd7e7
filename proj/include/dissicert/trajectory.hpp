#pragma once

#include <array>

#include "dissicert/certifier.hpp"
#include "dissicert/ocp.hpp"

namespace dissicert {

// Piecewise-constant input signal. values[i] applies on
// [breakpoints[i], breakpoints[i+1]); the first value extends backward in
// time and the last one forward, so the signal is total on the real line.
struct ControlSignal {
  std::vector<double> breakpoints;
  std::vector<Vector> values;

  // Throws unless breakpoints are strictly ascending, sizes match, there is
  // at least one interval, and every value has dimension m.
  void validate(Index m) const;

  const Vector& value_at(double t) const;
};

ControlSignal constant_control(const Vector& value, double start = 0.0);

// States on an ascending time grid; states[0] = x0 at times[0] = 0. Each
// step is the exact flow of the constant-input dynamics over the step.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  Vector x0;
};

// Integrates dx/dt = Ax + Bu from x(0) = x0 up to t_end. The grid is the
// regular dt lattice refined with every control breakpoint, so each step has
// constant input and the update x+ = e^{Ah}x + Phi(h)Bu is exact (both
// factors come from one augmented matrix exponential).
Trajectory simulate(const OcpInstance& ocp, const Vector& x0,
                    const ControlSignal& u, double t_end, double dt);

struct IntegralCheck {
  bool holds = false;
  double lhs = 0.0;    // V(x(t2)) - V(x(t1))
  double rhs = 0.0;    // integral of cost-above-equilibrium minus rate
  double margin = 0.0; // rhs - lhs
  double quad_tol_used = 0.0;
};

// Verifies V(x(t2)) - V(x(t1)) <= int_{t1}^{t2} [l(x,u) - l(x_e,u_e)
// - alpha_c |x - x_e|^2] dt along the trajectory started at x0 at time 0.
// The integral is composite Simpson per constant-input segment, refined by
// doubling until successive estimates differ by less than quad_tol
// (default: 1e-9 * (1 + |estimate|)). holds iff lhs <= rhs + 10 * quad_tol.
IntegralCheck integral_dissipation_check(const OcpInstance& ocp,
                                         const DissipativityCertificate& cert,
                                         const Vector& x0,
                                         const ControlSignal& u, double t1,
                                         double t2,
                                         double quad_tol = kAutoTol);

struct DifferentialRecovery {
  double lhs = 0.0;   // 2 <Ax0 + Bu0, P x0 + w>
  double rhs = 0.0;   // l(x0,u0) - l(x_e,u_e) - alpha_c |x0 - x_e|^2
  bool holds = false;
  std::array<double, 3> horizons{};
  std::array<double, 3> scaled_gaps{};  // (lhs_int - rhs_int)/t2 per horizon
  double order = 0.0;  // convergence order towards lhs - rhs; NaN if degenerate
};

// Shrinks the integral check over [0, t2] for t2 in {1e-2, 1e-3, 1e-4} with
// constant input u0 and confirms (lhs - rhs)/t2 approaches the pointwise
// derivative gap at first order in t2.
DifferentialRecovery differential_recovery_check(
    const OcpInstance& ocp, const DissipativityCertificate& cert,
    const Vector& x0, const Vector& u0);

}  // namespace dissicert
