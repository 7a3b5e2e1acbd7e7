// Command-line front end: problem-file ingestion, certification pipeline,
// detectability-based storage construction, scenario validation, and a
// Galerkin heat-equation instance generator.
//
// Exit codes: 0 = certified / report produced, 2 = a checked condition
// failed or was refuted, 1 = usage or parse errors.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "dissicert/certifier.hpp"
#include "dissicert/detectability.hpp"
#include "dissicert/ocp.hpp"
#include "dissicert/problem_io.hpp"
#include "dissicert/steady_state.hpp"
#include "dissicert/storage.hpp"
#include "dissicert/trajectory.hpp"

namespace {

using namespace dissicert;
using ojson = nlohmann::ordered_json;

// Usage-level failures (exit 1), distinct from refuted conditions (exit 2).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int log_level() {
  static const int level = [] {
    const char* env = std::getenv("DISSICERT_LOG");
    if (env == nullptr) return 1;
    const std::string s(env);
    if (s == "error") return 0;
    if (s == "warn") return 1;
    if (s == "info") return 2;
    if (s == "debug") return 3;
    std::cerr << "[warn] DISSICERT_LOG value '" << s
              << "' not recognized; using 'warn'\n";
    return 1;
  }();
  return level;
}

void log_at(int lvl, const char* tag, const std::string& msg) {
  if (log_level() >= lvl) std::cerr << "[" << tag << "] " << msg << "\n";
}
void log_warn(const std::string& msg) { log_at(1, "warn", msg); }
void log_info(const std::string& msg) { log_at(2, "info", msg); }
void log_debug(const std::string& msg) { log_at(3, "debug", msg); }

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw UsageError(std::string("cannot open ") + what + ": " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct CommonOpts {
  std::string problem_path;
  std::string tol_overrides_path;
  std::string output = "human";
  std::uint64_t seed = 42;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool problem_required = true) {
  auto* problem = cmd->add_option("--problem", opts.problem_path,
                                  "Problem file (structured text)");
  if (problem_required) problem->required();
  cmd->add_option("--tol-overrides", opts.tol_overrides_path,
                  "File overriding tolerance defaults");
  cmd->add_option("--output", opts.output, "Report rendering")
      ->check(CLI::IsMember({"human", "machine"}))
      ->capture_default_str();
  cmd->add_option("--seed", opts.seed, "Seed for randomized validation")
      ->capture_default_str();
}

Tolerances resolve_tolerances(const ParsedProblem& prob,
                              const std::string& tol_path) {
  if (tol_path.empty()) return prob.tol;
  return parse_tolerance_overrides(read_file(tol_path, "tolerance overrides"),
                                   prob.tol);
}

// --- scenario generation for trajectory validation -------------------------

struct Scenario {
  Vector x0;
  ControlSignal u;
  double t1;
  double t2;
};

Scenario make_scenario(std::mt19937_64& rng, const OcpInstance& ocp,
                       const SteadyState& ss) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Index n = ocp.state_dim();
  const Index m = ocp.input_dim();

  Vector dir(n);
  for (Index i = 0; i < n; ++i) dir(i) = gauss(rng);
  if (dir.norm() == 0.0) dir(0) = 1.0;
  dir.normalize();

  Scenario s;
  s.x0 = ss.x_e + (10.0 * unif(rng)) * dir;
  const double horizon = 0.5 + 4.5 * unif(rng);
  s.t1 = 0.2 * horizon * unif(rng);
  s.t2 = horizon;

  const int pieces = 1 + static_cast<int>(unif(rng) * 4.0);
  std::vector<double> bps{0.0};
  for (int k = 1; k < pieces; ++k) bps.push_back(horizon * unif(rng));
  std::sort(bps.begin(), bps.end());
  s.u.breakpoints.push_back(bps[0]);
  for (std::size_t k = 1; k < bps.size(); ++k) {
    if (bps[k] > s.u.breakpoints.back()) s.u.breakpoints.push_back(bps[k]);
  }
  for (std::size_t k = 0; k < s.u.breakpoints.size(); ++k) {
    Vector val(m);
    for (Index i = 0; i < m; ++i) val(i) = ss.u_e(i) + 2.0 * gauss(rng);
    s.u.values.push_back(val);
  }
  return s;
}

struct ValidationSummary {
  int scenarios = 0;
  int violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
};

ValidationSummary validate_certificate(const OcpInstance& ocp,
                                       const DissipativityCertificate& cert,
                                       int n_scenarios, std::uint64_t seed,
                                       double quad_tol) {
  ValidationSummary summary;
  summary.scenarios = n_scenarios;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < n_scenarios; ++i) {
    const Scenario s = make_scenario(rng, ocp, cert.ss);
    try {
      const IntegralCheck chk = integral_dissipation_check(
          ocp, cert, s.x0, s.u, s.t1, s.t2, quad_tol);
      summary.worst_margin = std::min(summary.worst_margin, chk.margin);
      if (!chk.holds) {
        ++summary.violations;
        std::ostringstream os;
        os << "scenario " << i << " violates the integral inequality, margin "
           << chk.margin;
        log_warn(os.str());
      }
    } catch (const QuadratureNotConverged& e) {
      ++summary.violations;
      log_warn(std::string("scenario quadrature failed: ") + e.what());
    }
  }
  return summary;
}

// --- certification pipeline -------------------------------------------------

struct PipelineResult {
  CertReport report;
  int exit_code = 0;
};

PipelineResult run_pipeline(const ParsedProblem& prob, const Tolerances& tol,
                            bool from_detectability, bool require_bounded,
                            std::uint64_t seed) {
  PipelineResult out;
  CertReport& rep = out.report;
  rep.problem_name = prob.name;
  rep.seed = seed;
  rep.require_bounded = require_bounded;
  const OcpInstance& ocp = prob.ocp;
  const CertifierOptions copts = to_certifier_options(tol, seed);

  try {
    log_info("checking cost/input compatibility");
    const CompatibilityResult comp =
        compatibility_constant(ocp, kAutoTol, tol.range_tol);
    if (!comp.holds) {
      rep.verdict = "error";
      rep.message = "cost/input compatibility fails: ran B* escapes ran K*";
      rep.checklist.push_back(ConditionRecord{
          "compatibility", false, comp.range_residual, "range residual"});
      out.exit_code = 2;
      return out;
    }

    SteadyState ss{};
    if (prob.ss) {
      log_info("using the steady state supplied in the problem file");
      ss = *prob.ss;
    } else {
      log_info("solving the optimal steady-state problem");
      ss = solve_steady_state(ocp).ss;
    }

    std::optional<SymmetricOperator> p_candidate;
    if (from_detectability) {
      log_info("constructing a storage candidate from detectability");
      const DetectabilityStorage ds =
          storage_from_detectability(ocp.A(), ocp.C());
      // Fold the accepted weight into the candidate so the unit weight
      // succeeds directly inside certify_at.
      p_candidate = SymmetricOperator(Matrix(ds.eta * ds.P.matrix()));
      std::ostringstream os;
      os << "detectability storage: eta = " << ds.eta << ", m = " << ds.m;
      log_debug(os.str());
    } else if (prob.storage_p) {
      p_candidate = *prob.storage_p;
    } else {
      throw UsageError(
          "no storage candidate: supply P in the problem file or pass "
          "--from-detectability");
    }

    const DissipativityCertificate cert =
        certify_at(ocp, ss, *p_candidate, copts);
    rep.certificate = cert;
    rep.checklist = cert.diagnostics;
    rep.verdict = to_string(cert.kind);
    if (require_bounded && cert.kind != CertificateKind::kStrictDissipative) {
      rep.message =
          "storage is not bounded below and --require-bounded was set";
      out.exit_code = 2;
    }
  } catch (const NotCoercive& e) {
    rep.verdict = "not-coercive";
    rep.message = e.what();
    rep.checklist.push_back(ConditionRecord{"steady-state", false,
                                            e.min_eigenvalue,
                                            "reduced Hessian min eigenvalue"});
    out.exit_code = 2;
  } catch (const FormInequalityFailed& e) {
    rep.verdict = "form-inequality-failed";
    rep.message = e.what();
    rep.checklist.push_back(ConditionRecord{
        "form-inequality", false, e.best_m, "best margin over the weight grid"});
    out.exit_code = 2;
  } catch (const AlgebraicConditionFailed& e) {
    rep.verdict = "algebraic-condition-failed";
    rep.message = e.what();
    rep.checklist.push_back(ConditionRecord{"algebraic-condition", false,
                                            e.residual,
                                            "least-squares residual"});
    out.exit_code = 2;
  } catch (const InvalidSteadyState& e) {
    rep.verdict = "error";
    rep.message = e.what();
    rep.checklist.push_back(ConditionRecord{"steady-state", false, e.residual,
                                            "equilibrium residual"});
    out.exit_code = 2;
  } catch (const NotDetectable& e) {
    rep.verdict = "error";
    rep.message = e.what();
    rep.checklist.push_back(
        ConditionRecord{"detectability", false, 0.0, "Hautus test"});
    out.exit_code = 2;
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    rep.verdict = "error";
    rep.message = e.what();
    out.exit_code = 2;
  }
  return out;
}

void emit(const CertReport& rep, const std::string& output) {
  if (output == "machine") {
    std::cout << render_machine(rep);
  } else {
    std::cout << render_human(rep);
  }
}

int cmd_certify(const CommonOpts& common, bool from_detectability,
                bool require_bounded, int validate_n) {
  const ParsedProblem prob = parse_problem(common.problem_path);
  const Tolerances tol = resolve_tolerances(prob, common.tol_overrides_path);
  PipelineResult pr =
      run_pipeline(prob, tol, from_detectability, require_bounded, common.seed);

  if (pr.report.certificate && validate_n > 0) {
    log_info("validating the certificate on simulated trajectories");
    const ValidationSummary summary = validate_certificate(
        prob.ocp, *pr.report.certificate, validate_n, common.seed, tol.quad_tol);
    pr.report.validate_scenarios = summary.scenarios;
    pr.report.worst_validation_margin = summary.worst_margin;
    if (summary.violations > 0) {
      pr.exit_code = 2;
      std::ostringstream os;
      os << summary.violations << " of " << summary.scenarios
         << " validation scenarios violated the integral inequality";
      pr.report.message = pr.report.message.empty()
                              ? os.str()
                              : pr.report.message + "; " + os.str();
    }
  }
  emit(pr.report, common.output);
  return pr.exit_code;
}

int cmd_steady_state(const CommonOpts& common) {
  const ParsedProblem prob = parse_problem(common.problem_path);
  try {
    const SteadyStateSolution sol = solve_steady_state(prob.ocp);
    if (common.output == "machine") {
      ojson j;
      j["schema_version"] = kReportSchemaVersion;
      j["problem"] = prob.name;
      j["x_e"] = ojson::array();
      for (Index i = 0; i < sol.ss.x_e.size(); ++i) j["x_e"].push_back(sol.ss.x_e(i));
      j["u_e"] = ojson::array();
      for (Index i = 0; i < sol.ss.u_e.size(); ++i) j["u_e"].push_back(sol.ss.u_e(i));
      j["optimal_cost"] = sol.optimal_cost;
      j["stationarity"] = sol.stationarity;
      j["kernel_dim"] = sol.y_coord.size();
      std::cout << j.dump(2) << "\n";
    } else {
      std::ostringstream os;
      os << std::setprecision(12);
      os << "problem:  " << prob.name << "\n";
      os << "x_e = [";
      for (Index i = 0; i < sol.ss.x_e.size(); ++i) {
        if (i) os << ", ";
        os << sol.ss.x_e(i);
      }
      os << "], u_e = [";
      for (Index i = 0; i < sol.ss.u_e.size(); ++i) {
        if (i) os << ", ";
        os << sol.ss.u_e(i);
      }
      os << "]\n";
      os << "optimal cost = " << sol.optimal_cost << "\n";
      os << "stationarity residual = " << sol.stationarity << "\n";
      os << "kernel dimension = " << sol.y_coord.size() << "\n";
      std::cout << os.str();
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "steady-state failed: " << e.what() << "\n";
    return 2;
  }
}

int cmd_detect(const CommonOpts& common) {
  const ParsedProblem prob = parse_problem(common.problem_path);
  try {
    const HautusResult hautus =
        hautus_detectable(prob.ocp.A(), prob.ocp.C());
    const DetectabilityStorage ds =
        storage_from_detectability(prob.ocp.A(), prob.ocp.C());
    if (common.output == "machine") {
      ojson j;
      j["schema_version"] = kReportSchemaVersion;
      j["problem"] = prob.name;
      j["detectable"] = hautus.detectable;
      j["worst_hautus_ratio"] = hautus.worst_ratio;
      ojson f = ojson::array();
      for (Index i = 0; i < ds.F.rows(); ++i) {
        ojson row = ojson::array();
        for (Index k = 0; k < ds.F.cols(); ++k) row.push_back(ds.F(i, k));
        f.push_back(row);
      }
      j["F"] = f;
      ojson p = ojson::array();
      for (Index i = 0; i < ds.P.dim(); ++i) {
        ojson row = ojson::array();
        for (Index k = 0; k < ds.P.dim(); ++k) row.push_back(ds.P.matrix()(i, k));
        p.push_back(row);
      }
      j["P"] = p;
      j["eta"] = ds.eta;
      j["m"] = ds.m;
      ojson sj;
      sj["evaluated"] = ds.schur.evaluated;
      if (ds.schur.evaluated) {
        sj["eps"] = ds.schur.eps;
        sj["kappa"] = ds.schur.kappa;
        sj["dim_h1"] = ds.schur.dim_h1;
        sj["dim_h2"] = ds.schur.dim_h2;
        sj["t11_margin"] = ds.schur.t11_margin;
        sj["schur_margin"] = ds.schur.schur_margin;
      }
      sj["agrees"] = ds.schur.agrees;
      j["schur_certificate"] = sj;
      std::cout << j.dump(2) << "\n";
    } else {
      std::ostringstream os;
      os << std::setprecision(12);
      os << "problem:  " << prob.name << "\n";
      os << "detectable: yes (worst Hautus ratio " << hautus.worst_ratio
         << ")\n";
      os << "detector F:\n" << ds.F << "\n";
      os << "storage P:\n" << ds.P.matrix() << "\n";
      os << "eta = " << ds.eta << ", m = " << ds.m << "\n";
      if (ds.schur.evaluated) {
        os << "Schur certificate: eps = " << ds.schur.eps
           << ", kappa = " << ds.schur.kappa << ", split " << ds.schur.dim_h1
           << "+" << ds.schur.dim_h2 << ", T11 margin = " << ds.schur.t11_margin
           << ", Schur margin = " << ds.schur.schur_margin
           << (ds.schur.agrees ? " (agrees)" : " (DISAGREES)") << "\n";
      } else {
        os << "Schur certificate: split degenerate, direct verdict used\n";
      }
      std::cout << os.str();
    }
    return 0;
  } catch (const NotDetectable& e) {
    std::cerr << "not detectable: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "detect failed: " << e.what() << "\n";
    return 2;
  }
}

DissipativityCertificate cert_from_report(const std::string& path,
                                          const ParsedProblem& prob) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path, "certificate report"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid certificate report: ") + e.what());
  }
  if (!j.contains("certificate") || !j["certificate"].is_object()) {
    throw ParseError("report carries no certificate payload");
  }
  const nlohmann::json& cj = j["certificate"];
  const Index n = prob.ocp.state_dim();
  const Index m = prob.ocp.input_dim();
  const auto vec = [&](const char* key, Index len) {
    if (!cj.contains(key) || !cj[key].is_array() ||
        static_cast<Index>(cj[key].size()) != len) {
      throw ParseError(std::string("certificate field '") + key +
                       "' missing or mis-sized");
    }
    Vector out(len);
    for (Index i = 0; i < len; ++i) out(i) = cj[key].at(i).get<double>();
    return out;
  };
  if (!cj.contains("P") || !cj["P"].is_array() ||
      static_cast<Index>(cj["P"].size()) != n) {
    throw ParseError("certificate field 'P' missing or mis-sized");
  }
  Matrix p(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < n; ++k) p(i, k) = cj["P"].at(i).at(k).get<double>();
  }

  DissipativityCertificate cert{
      cj.at("kind").get<std::string>() == "strictly-dissipative"
          ? CertificateKind::kStrictDissipative
          : CertificateKind::kStrictPreDissipative,
      SteadyState{vec("x_e", n), vec("u_e", m)},
      QuadraticStorage{SymmetricOperator(p, prob.tol.sym_tol), vec("w", n)},
      cj.at("gamma").get<double>(),
      cj.at("eta").get<double>(),
      cj.at("m").get<double>(),
      cj.at("alpha_c").get<double>(),
      vec("w_tilde", n),
      {}};
  return cert;
}

int cmd_simulate(const CommonOpts& common, const std::string& cert_path,
                 bool from_detectability, int scenarios) {
  const ParsedProblem prob = parse_problem(common.problem_path);
  const Tolerances tol = resolve_tolerances(prob, common.tol_overrides_path);

  std::optional<DissipativityCertificate> cert;
  if (!cert_path.empty()) {
    cert = cert_from_report(cert_path, prob);
  } else {
    const PipelineResult pr =
        run_pipeline(prob, tol, from_detectability, false, common.seed);
    if (!pr.report.certificate) {
      std::cerr << "cannot simulate without a certificate: " << pr.report.verdict
                << (pr.report.message.empty() ? "" : " - " + pr.report.message)
                << "\n";
      return 2;
    }
    cert = pr.report.certificate;
  }

  const ValidationSummary summary = validate_certificate(
      prob.ocp, *cert, scenarios, common.seed, tol.quad_tol);
  if (common.output == "machine") {
    ojson j;
    j["schema_version"] = kReportSchemaVersion;
    j["problem"] = prob.name;
    j["seed"] = common.seed;
    j["scenarios"] = summary.scenarios;
    j["violations"] = summary.violations;
    j["worst_margin"] = summary.worst_margin;
    std::cout << j.dump(2) << "\n";
  } else {
    std::ostringstream os;
    os << std::setprecision(12);
    os << "problem:  " << prob.name << "\n";
    os << "scenarios: " << summary.scenarios
       << ", violations: " << summary.violations
       << ", worst margin: " << summary.worst_margin << "\n";
    std::cout << os.str();
  }
  return summary.violations > 0 ? 2 : 0;
}

int cmd_generate_heat(Index n_modes, Index control_first_k,
                      Index observe_first_k, double kappa,
                      const std::string& name, const std::string& out_path) {
  HeatInstanceSpec spec;
  spec.n_modes = n_modes;
  spec.control_first_k = control_first_k;
  spec.output_first_k = observe_first_k;
  spec.diffusion = kappa;
  std::string instance_name = name;
  if (instance_name.empty()) {
    std::ostringstream os;
    os << "heat-" << n_modes << "modes";
    instance_name = os.str();
  }
  const ParsedProblem prob = heat_problem(spec, instance_name);
  const std::string text = serialize_problem(prob);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw UsageError("cannot write problem file: " + out_path);
    out << text;
    log_info("wrote " + out_path);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "dissicert: decides and certifies strict (pre-)dissipativity of "
      "linear-quadratic optimal control problems"};
  app.require_subcommand(1);

  CommonOpts certify_opts;
  bool certify_from_det = false;
  bool certify_require_bounded = false;
  int certify_validate = 0;
  CLI::App* certify = app.add_subcommand(
      "certify", "Run the full certification pipeline on a problem file");
  add_common(certify, certify_opts);
  certify->add_flag("--from-detectability", certify_from_det,
                    "Build the storage candidate from (A, C) detectability");
  certify->add_flag("--require-bounded", certify_require_bounded,
                    "Fail (exit 2) unless the storage is bounded below");
  certify->add_option("--validate", certify_validate,
                      "Check the certificate on N simulated scenarios")
      ->capture_default_str();

  CommonOpts ss_opts;
  CLI::App* steady = app.add_subcommand(
      "steady-state", "Solve the optimal steady-state problem");
  add_common(steady, ss_opts);

  CommonOpts detect_opts;
  CLI::App* detect = app.add_subcommand(
      "detect", "Detectability analysis and storage construction for (A, C)");
  add_common(detect, detect_opts);

  CommonOpts sim_opts;
  std::string sim_cert_path;
  bool sim_from_det = false;
  int sim_scenarios = 20;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Validate a certificate along simulated trajectories");
  add_common(simulate, sim_opts);
  simulate->add_option("--certificate", sim_cert_path,
                       "Machine report to take the certificate from "
                       "(default: re-derive from the problem file)");
  simulate->add_flag("--from-detectability", sim_from_det,
                     "Build the storage candidate from (A, C) detectability");
  simulate->add_option("--scenarios", sim_scenarios, "Number of scenarios")
      ->capture_default_str();

  Index heat_modes = 1;
  Index heat_control_k = 1;
  Index heat_observe_k = 0;
  double heat_kappa = 1.0;
  std::string heat_name;
  std::string heat_out;
  CLI::App* heat = app.add_subcommand(
      "generate-heat", "Generate a spectral Galerkin heat-equation instance");
  heat->add_option("--n-modes", heat_modes, "Number of sine modes")
      ->required();
  heat->add_option("--control-first-k", heat_control_k,
                   "Actuate the first k modes (one input per mode)")
      ->capture_default_str();
  heat->add_option("--observe-first-k", heat_observe_k,
                   "Observe only the first k modes (0 = full observation)")
      ->capture_default_str();
  heat->add_option("--kappa", heat_kappa, "Diffusion coefficient")
      ->capture_default_str();
  heat->add_option("--name", heat_name, "Instance name");
  heat->add_option("--out", heat_out, "Output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*certify) {
      return cmd_certify(certify_opts, certify_from_det,
                         certify_require_bounded, certify_validate);
    }
    if (*steady) return cmd_steady_state(ss_opts);
    if (*detect) return cmd_detect(detect_opts);
    if (*simulate) {
      return cmd_simulate(sim_opts, sim_cert_path, sim_from_det, sim_scenarios);
    }
    if (*heat) {
      return cmd_generate_heat(heat_modes, heat_control_k, heat_observe_k,
                               heat_kappa, heat_name, heat_out);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const DimensionError& e) {
    std::cerr << "dimension error: " << e.what() << "\n";
    return 1;
  } catch (const SymmetryError& e) {
    std::cerr << "symmetry error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected failure: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
