#pragma once

#include <stdexcept>
#include <string>

namespace dissicert {

// Base class for every failure the toolkit can diagnose. Catching this is
// enough to translate any library failure into a CLI verdict.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- construction / parsing ---

class DimensionError : public Error {
 public:
  using Error::Error;
};

class SymmetryError : public Error {
 public:
  SymmetryError(const std::string& what, double asymmetry)
      : Error(what), asymmetry(asymmetry) {}
  double asymmetry;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// Cost/input geometry incompatible: ran B* not contained in ran K*, so no
// c_K > 0 with ||Ku|| >= c_K ||Bu|| exists.
class IncompatibleCost : public Error {
 public:
  using Error::Error;
};

// --- spectral core ---

class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

class NotPsd : public Error {
 public:
  NotPsd(const std::string& what, double min_eigenvalue)
      : Error(what), min_eigenvalue(min_eigenvalue) {}
  double min_eigenvalue;
};

// A self-check on a computed object failed (spectral identities, sampled
// form bounds). Carries the worst observed defect.
class CheckFailed : public Error {
 public:
  CheckFailed(const std::string& what, double defect)
      : Error(what), defect(defect) {}
  double defect;
};

// --- steady state ---

class EmptyKernel : public Error {
 public:
  using Error::Error;
};

class NotCoercive : public Error {
 public:
  NotCoercive(const std::string& what, double min_eigenvalue)
      : Error(what), min_eigenvalue(min_eigenvalue) {}
  double min_eigenvalue;
};

class InvalidSteadyState : public Error {
 public:
  InvalidSteadyState(const std::string& what, double residual)
      : Error(what), residual(residual) {}
  double residual;
};

// --- certifier ---

class FormInequalityFailed : public Error {
 public:
  FormInequalityFailed(const std::string& what, double best_eta, double best_m)
      : Error(what), best_eta(best_eta), best_m(best_m) {}
  double best_eta;
  double best_m;
};

class AlgebraicConditionFailed : public Error {
 public:
  AlgebraicConditionFailed(const std::string& what, double residual)
      : Error(what), residual(residual) {}
  double residual;
};

// A certificate the pipeline just produced failed its own independent
// re-verification. Always a bug or a tolerance cliff, never a user error.
class InternalVerificationFailed : public Error {
 public:
  using Error::Error;
};

// --- detectability ---

class NotStable : public Error {
 public:
  NotStable(const std::string& what, double spectral_abscissa)
      : Error(what), spectral_abscissa(spectral_abscissa) {}
  double spectral_abscissa;
};

class NotDetectable : public Error {
 public:
  using Error::Error;
};

class BisectionExhausted : public Error {
 public:
  using Error::Error;
};

class RangeConditionFailed : public Error {
 public:
  RangeConditionFailed(const std::string& what, double residual)
      : Error(what), residual(residual) {}
  double residual;
};

// --- trajectory ---

class QuadratureNotConverged : public Error {
 public:
  using Error::Error;
};

}  // namespace dissicert
