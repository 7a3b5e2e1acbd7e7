#include "dissicert/problem_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace dissicert {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

void require_keys(const json& obj, const std::string& where,
                  std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ParseError("unknown field '" + item.key() + "' in " + where);
    }
  }
}

const json& require_field(const json& obj, const char* key,
                          const std::string& where) {
  if (!obj.contains(key)) {
    throw ParseError("missing field '" + std::string(key) + "' in " + where);
  }
  return obj.at(key);
}

double as_number(const json& value, const std::string& where) {
  if (!value.is_number()) throw ParseError(where + " must be a number");
  return value.get<double>();
}

Index as_dim(const json& value, const std::string& where) {
  if (!value.is_number_integer() || value.get<std::int64_t>() < 1) {
    throw ParseError(where + " must be a positive integer");
  }
  return static_cast<Index>(value.get<std::int64_t>());
}

Vector parse_vector(const json& value, Index expected,
                    const std::string& where) {
  if (!value.is_array()) throw ParseError(where + " must be an array");
  if (static_cast<Index>(value.size()) != expected) {
    std::ostringstream os;
    os << where << " has length " << value.size() << ", dims require "
       << expected;
    throw DimensionError(os.str());
  }
  Vector out(expected);
  for (Index i = 0; i < expected; ++i) {
    out(i) = as_number(value.at(static_cast<std::size_t>(i)),
                       where + " entry");
  }
  return out;
}

Matrix parse_matrix(const json& value, Index rows, Index cols,
                    const std::string& where) {
  if (!value.is_array()) {
    throw ParseError(where + " must be an array of row arrays");
  }
  if (static_cast<Index>(value.size()) != rows) {
    std::ostringstream os;
    os << where << " has " << value.size() << " rows, dims require " << rows;
    throw DimensionError(os.str());
  }
  Matrix out(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = value.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      std::ostringstream os;
      os << where << " row " << i << " must have " << cols << " entries";
      throw DimensionError(os.str());
    }
    for (Index j = 0; j < cols; ++j) {
      out(i, j) = as_number(row.at(static_cast<std::size_t>(j)),
                            where + " entry");
    }
  }
  return out;
}

ojson vector_to_json(const Vector& v) {
  ojson out = ojson::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

ojson matrix_to_json(const Matrix& m) {
  ojson out = ojson::array();
  for (Index i = 0; i < m.rows(); ++i) {
    ojson row = ojson::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

void merge_tolerances(const json& obj, Tolerances& tol,
                      const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + " must be an object");
  require_keys(obj, where,
               {"sym_tol", "eq_tol", "range_tol", "check_tol", "margin_tol",
                "quad_tol"});
  if (obj.contains("sym_tol")) tol.sym_tol = as_number(obj["sym_tol"], where);
  if (obj.contains("eq_tol")) tol.eq_tol = as_number(obj["eq_tol"], where);
  if (obj.contains("range_tol")) {
    tol.range_tol = as_number(obj["range_tol"], where);
  }
  if (obj.contains("check_tol")) {
    tol.check_tol = as_number(obj["check_tol"], where);
  }
  if (obj.contains("margin_tol")) {
    tol.margin_tol = as_number(obj["margin_tol"], where);
  }
  if (obj.contains("quad_tol")) tol.quad_tol = as_number(obj["quad_tol"], where);
}

std::string format_vector(const Vector& v) {
  std::ostringstream os;
  os << std::setprecision(12) << "[";
  for (Index i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << v(i);
  }
  os << "]";
  return os.str();
}

std::string format_matrix(const Matrix& m) {
  std::ostringstream os;
  os << std::setprecision(12) << "[";
  for (Index i = 0; i < m.rows(); ++i) {
    if (i) os << "; ";
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ", ";
      os << m(i, j);
    }
  }
  os << "]";
  return os.str();
}

}  // namespace

ParsedProblem parse_problem_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid problem document: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("problem document must be an object");
  require_keys(j, "problem",
               {"name", "dims", "A", "B", "C", "K", "z", "v", "P",
                "steady_state", "tolerances"});

  const json& name_field = require_field(j, "name", "problem");
  if (!name_field.is_string()) throw ParseError("'name' must be a string");

  const json& dims = require_field(j, "dims", "problem");
  if (!dims.is_object()) throw ParseError("'dims' must be an object");
  require_keys(dims, "dims", {"n", "m", "p", "q"});
  const Index n = as_dim(require_field(dims, "n", "dims"), "dims.n");
  const Index m = as_dim(require_field(dims, "m", "dims"), "dims.m");
  const Index p = as_dim(require_field(dims, "p", "dims"), "dims.p");
  const Index q = as_dim(require_field(dims, "q", "dims"), "dims.q");

  Tolerances tol;
  if (j.contains("tolerances")) {
    merge_tolerances(j["tolerances"], tol, "tolerances");
  }

  const Matrix a = parse_matrix(require_field(j, "A", "problem"), n, n, "A");
  const Matrix b = parse_matrix(require_field(j, "B", "problem"), n, m, "B");
  const Matrix c = parse_matrix(require_field(j, "C", "problem"), p, n, "C");
  const Matrix k = parse_matrix(require_field(j, "K", "problem"), q, m, "K");
  const Vector z = parse_vector(require_field(j, "z", "problem"), n, "z");
  const Vector v = parse_vector(require_field(j, "v", "problem"), m, "v");

  ParsedProblem out{
      name_field.get<std::string>(),
      OcpInstance(a, b, c, k, z, v, OcpInstance::Validation::kDeferred),
      std::nullopt,
      std::nullopt,
      tol};

  if (j.contains("P")) {
    out.storage_p =
        SymmetricOperator(parse_matrix(j["P"], n, n, "P"), tol.sym_tol);
  }
  if (j.contains("steady_state")) {
    const json& ss = j["steady_state"];
    if (!ss.is_object()) throw ParseError("'steady_state' must be an object");
    require_keys(ss, "steady_state", {"x_e", "u_e"});
    out.ss = SteadyState{
        parse_vector(require_field(ss, "x_e", "steady_state"), n,
                     "steady_state.x_e"),
        parse_vector(require_field(ss, "u_e", "steady_state"), m,
                     "steady_state.u_e")};
  }
  return out;
}

ParsedProblem parse_problem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open problem file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_problem_text(buffer.str());
}

std::string serialize_problem(const ParsedProblem& problem) {
  ojson j;
  j["name"] = problem.name;
  j["dims"] = {{"n", problem.ocp.state_dim()},
               {"m", problem.ocp.input_dim()},
               {"p", problem.ocp.output_dim()},
               {"q", problem.ocp.penalty_dim()}};
  j["A"] = matrix_to_json(problem.ocp.A());
  j["B"] = matrix_to_json(problem.ocp.B());
  j["C"] = matrix_to_json(problem.ocp.C());
  j["K"] = matrix_to_json(problem.ocp.K());
  j["z"] = vector_to_json(problem.ocp.z());
  j["v"] = vector_to_json(problem.ocp.v());
  if (problem.storage_p) {
    j["P"] = matrix_to_json(problem.storage_p->matrix());
  }
  if (problem.ss) {
    j["steady_state"] = {{"x_e", vector_to_json(problem.ss->x_e)},
                         {"u_e", vector_to_json(problem.ss->u_e)}};
  }
  j["tolerances"] = {{"sym_tol", problem.tol.sym_tol},
                     {"eq_tol", problem.tol.eq_tol},
                     {"range_tol", problem.tol.range_tol},
                     {"check_tol", problem.tol.check_tol},
                     {"margin_tol", problem.tol.margin_tol},
                     {"quad_tol", problem.tol.quad_tol}};
  return j.dump(2) + "\n";
}

Tolerances parse_tolerance_overrides(const std::string& text,
                                     const Tolerances& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid tolerance document: ") + e.what());
  }
  Tolerances tol = base;
  merge_tolerances(j, tol, "tolerance overrides");
  return tol;
}

CertifierOptions to_certifier_options(const Tolerances& tol,
                                      std::uint64_t seed) {
  CertifierOptions options;
  options.margin_tol = tol.margin_tol;
  options.check_tol = tol.check_tol;
  options.range_tol = tol.range_tol;
  options.eq_tol = tol.eq_tol;
  options.seed = seed;
  return options;
}

OcpInstance generate_heat_instance(const HeatInstanceSpec& spec) {
  if (spec.n_modes < 1) throw Error("heat instance needs n_modes >= 1");
  if (!(spec.diffusion > 0.0)) throw Error("diffusion must be positive");
  const Index n = spec.n_modes;

  Matrix a = Matrix::Zero(n, n);
  for (Index k = 0; k < n; ++k) {
    const double mode = static_cast<double>(k + 1);
    a(k, k) = -spec.diffusion * mode * mode * std::numbers::pi * std::numbers::pi;
  }

  Matrix b;
  if (spec.control_coefficients) {
    if (spec.control_coefficients->size() != n) {
      throw DimensionError("control coefficient vector must have n_modes entries");
    }
    b = *spec.control_coefficients;
  } else {
    if (spec.control_first_k < 1 || spec.control_first_k > n) {
      throw Error("control_first_k must lie in [1, n_modes]");
    }
    b = Matrix::Zero(n, spec.control_first_k);
    for (Index k = 0; k < spec.control_first_k; ++k) b(k, k) = 1.0;
  }

  Matrix c;
  if (spec.output_first_k == 0) {
    c = Matrix::Identity(n, n);
  } else {
    if (spec.output_first_k < 1 || spec.output_first_k > n) {
      throw Error("output_first_k must lie in [0, n_modes]");
    }
    c = Matrix::Zero(spec.output_first_k, n);
    for (Index k = 0; k < spec.output_first_k; ++k) c(k, k) = 1.0;
  }

  const Index m = b.cols();
  const Matrix k_mat = Matrix::Identity(m, m);
  Vector z = Vector::Zero(n);
  if (spec.z) {
    if (spec.z->size() != n) throw DimensionError("z must have n_modes entries");
    z = *spec.z;
  }
  Vector v = Vector::Zero(m);
  if (spec.v) {
    if (spec.v->size() != m) {
      throw DimensionError("v must match the number of control columns");
    }
    v = *spec.v;
  }
  return OcpInstance(a, b, c, k_mat, z, v);
}

ParsedProblem heat_problem(const HeatInstanceSpec& spec, std::string name) {
  return ParsedProblem{std::move(name), generate_heat_instance(spec),
                       std::nullopt, std::nullopt, Tolerances{}};
}

const char* to_string(CertificateKind kind) {
  switch (kind) {
    case CertificateKind::kStrictDissipative:
      return "strictly-dissipative";
    case CertificateKind::kStrictPreDissipative:
      return "strictly-pre-dissipative";
  }
  return "unknown";
}

std::string render_machine(const CertReport& report) {
  ojson j;
  j["schema_version"] = kReportSchemaVersion;
  j["problem"] = report.problem_name;
  j["verdict"] = report.verdict;
  j["seed"] = report.seed;
  j["require_bounded"] = report.require_bounded;
  if (report.certificate) {
    const DissipativityCertificate& cert = *report.certificate;
    ojson cj;
    cj["kind"] = to_string(cert.kind);
    cj["gamma"] = cert.gamma;
    cj["eta"] = cert.eta;
    cj["m"] = cert.m;
    cj["alpha_c"] = cert.alpha_c;
    cj["x_e"] = vector_to_json(cert.ss.x_e);
    cj["u_e"] = vector_to_json(cert.ss.u_e);
    cj["P"] = matrix_to_json(cert.storage.P.matrix());
    cj["w"] = vector_to_json(cert.storage.w);
    cj["w_tilde"] = vector_to_json(cert.w_tilde);
    j["certificate"] = cj;
  } else {
    j["certificate"] = nullptr;
  }
  ojson checklist = ojson::array();
  for (const ConditionRecord& rec : report.checklist) {
    checklist.push_back({{"name", rec.name},
                         {"passed", rec.passed},
                         {"value", rec.value},
                         {"detail", rec.detail}});
  }
  j["checklist"] = checklist;
  j["message"] = report.message;
  if (report.validate_scenarios > 0) {
    ojson vj;
    vj["scenarios"] = report.validate_scenarios;
    if (report.worst_validation_margin) {
      vj["worst_margin"] = *report.worst_validation_margin;
    } else {
      vj["worst_margin"] = nullptr;
    }
    j["validation"] = vj;
  } else {
    j["validation"] = nullptr;
  }
  return j.dump(2) + "\n";
}

std::string render_human(const CertReport& report) {
  std::ostringstream os;
  os << std::setprecision(12);
  os << "problem:  " << report.problem_name << "\n";
  os << "verdict:  " << report.verdict << "\n";
  if (!report.message.empty()) os << "note:     " << report.message << "\n";
  if (report.certificate) {
    const DissipativityCertificate& cert = *report.certificate;
    os << "steady state: x_e = " << format_vector(cert.ss.x_e)
       << ", u_e = " << format_vector(cert.ss.u_e) << "\n";
    os << "gamma = " << cert.gamma << ", eta = " << cert.eta
       << ", m = " << cert.m << ", alpha_c = " << cert.alpha_c << "\n";
    os << "P = " << format_matrix(cert.storage.P.matrix()) << "\n";
    os << "w = " << format_vector(cert.storage.w)
       << ", w_tilde = " << format_vector(cert.w_tilde) << "\n";
  }
  if (!report.checklist.empty()) {
    os << "conditions:\n";
    for (const ConditionRecord& rec : report.checklist) {
      os << "  [" << (rec.passed ? "ok" : "FAIL") << "] " << rec.name
         << "  value = " << rec.value;
      if (!rec.detail.empty()) os << "  (" << rec.detail << ")";
      os << "\n";
    }
  }
  if (report.validate_scenarios > 0) {
    os << "validation: " << report.validate_scenarios << " scenarios";
    if (report.worst_validation_margin) {
      os << ", worst margin = " << *report.worst_validation_margin;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace dissicert
