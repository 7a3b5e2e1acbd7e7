#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "dissicert/certifier.hpp"
#include "dissicert/ocp.hpp"

namespace dissicert {

// Tolerance knobs a problem file (or a --tol-overrides file) may adjust.
// Negative sentinel values mean "resolve relative to the operand".
struct Tolerances {
  double sym_tol = kSymTolRel;
  double eq_tol = kEqTol;
  double range_tol = kRangeTol;
  double check_tol = 1e-8;
  double margin_tol = kAutoTol;
  double quad_tol = kAutoTol;
};

struct ParsedProblem {
  std::string name;
  OcpInstance ocp;
  std::optional<SymmetricOperator> storage_p;
  std::optional<SteadyState> ss;
  Tolerances tol;
};

// Strict parse: unknown fields anywhere are rejected, every matrix and
// vector must match the declared dims exactly, and a supplied P must be
// symmetric within sym_tol. Compatibility of the cost is not checked here;
// the certification pipeline runs it as its first step.
ParsedProblem parse_problem_text(const std::string& text);
ParsedProblem parse_problem(const std::string& path);

// Inverse of parse: emits a document that parses back to bit-identical
// numeric fields.
std::string serialize_problem(const ParsedProblem& problem);

// Merges override keys (same schema as the in-file "tolerances" object)
// into base; unknown keys are rejected.
Tolerances parse_tolerance_overrides(const std::string& text,
                                     const Tolerances& base);

CertifierOptions to_certifier_options(const Tolerances& tol,
                                      std::uint64_t seed);

// Spectral Galerkin truncation of the 1-D Dirichlet heat equation on (0,1)
// in the sine eigenbasis, where the generator is exactly diagonal:
// A = diag(-kappa k^2 pi^2). Controls enter either on the first k modes
// (one column per mode) or through a single explicit coefficient column.
struct HeatInstanceSpec {
  Index n_modes = 1;
  Index control_first_k = 1;                   // ignored when coefficients set
  std::optional<Vector> control_coefficients;  // single-column B
  Index output_first_k = 0;                    // 0 means full observation
  double diffusion = 1.0;
  std::optional<Vector> z;
  std::optional<Vector> v;
};

OcpInstance generate_heat_instance(const HeatInstanceSpec& spec);
ParsedProblem heat_problem(const HeatInstanceSpec& spec, std::string name);

inline constexpr int kReportSchemaVersion = 1;

// Outcome of a certification run in both renderings. The verdict vocabulary:
// strictly-dissipative, strictly-pre-dissipative, form-inequality-failed,
// algebraic-condition-failed, not-coercive, plus "error" for failures that
// precede the characterization itself (incompatible cost, no steady state,
// undetectable pair, bad storage candidate).
struct CertReport {
  std::string verdict;
  std::string problem_name;
  std::uint64_t seed = 0;
  bool require_bounded = false;
  std::optional<DissipativityCertificate> certificate;
  std::vector<ConditionRecord> checklist;
  std::string message;
  int validate_scenarios = 0;
  std::optional<double> worst_validation_margin;
};

std::string render_machine(const CertReport& report);
std::string render_human(const CertReport& report);

const char* to_string(CertificateKind kind);

}  // namespace dissicert
