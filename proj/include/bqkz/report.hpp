#pragma once

// Config ingestion and JSON reports for the verify / solve / residuals
// commands. The tool in tools/ only adds argument parsing and file output.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bqkz/integral.hpp"
#include "bqkz/verify.hpp"

namespace bqkz {

using json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "bqkz-report/1";
inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr double kSolveTolerance = 1e-7;
inline constexpr double kRecomputeTolerance = 1e-12;

/// Invalid configuration: exit status 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Strict JSON access

namespace cfg {

inline void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

inline Complex complex_value(const json& v, const std::string& where) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  throw ConfigError(where + ": expected a number or [re, im]");
}

inline json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline json cvec_json(const CVec& v) {
  json out = json::array();
  for (Complex z : v) out.push_back(complex_json(z));
  return out;
}

template <class T>
T get(const json& obj, const char* key, const std::string& where, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

}  // namespace cfg

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

/// Everything except the timing block; byte-identical across runs with the
/// same config and seed.
inline std::string report_body(const json& report) {
  json body = report;
  body.erase("timing");
  return body.dump(2);
}

struct CommandResult {
  json report;
  int exit_code = 0;
};

// ---------------------------------------------------------------------------
// verify

struct VerifyConfig {
  std::vector<std::string> suites;  // empty: all
  std::uint64_t seed = 20240917;
  std::size_t samples = 100;
  SamplingRange range;
  unsigned threads = 0;
};

inline VerifyConfig parse_verify_config(const json& root) {
  cfg::allow_keys(root, "config", {"mode", "verify"});
  if (root.contains("mode") && root.at("mode") != "verify") throw ConfigError("config.mode: expected \"verify\"");
  VerifyConfig vc;
  if (!root.contains("verify")) return vc;
  const json& v = root.at("verify");
  cfg::allow_keys(v, "verify", {"suites", "seed", "samples", "sampling"});
  vc.suites = cfg::get<std::vector<std::string>>(v, "suites", "verify", {});
  vc.seed = cfg::get<std::uint64_t>(v, "seed", "verify", vc.seed);
  const long samples = cfg::get<long>(v, "samples", "verify", 100);
  if (samples < 1) throw ConfigError("verify.samples must be positive");
  vc.samples = static_cast<std::size_t>(samples);
  if (v.contains("sampling")) {
    const json& s = v.at("sampling");
    cfg::allow_keys(s, "verify.sampling", {"max_num", "max_den"});
    vc.range.max_num = cfg::get<long>(s, "max_num", "verify.sampling", 50);
    vc.range.max_den = cfg::get<long>(s, "max_den", "verify.sampling", 20);
    if (vc.range.max_num < 1 || vc.range.max_den < 1) throw ConfigError("verify.sampling ranges must be positive");
  }
  return vc;
}

inline json verify_config_json(const VerifyConfig& vc) {
  return {{"mode", "verify"},
          {"verify",
           {{"suites", vc.suites},
            {"seed", vc.seed},
            {"samples", vc.samples},
            {"sampling", {{"max_num", vc.range.max_num}, {"max_den", vc.range.max_den}}}}}};
}

inline json suite_json(const SuiteResult& r) {
  json shapes = json::array();
  for (const Shape& s : r.shapes) shapes.push_back(json::array({s.n, s.N}));
  return {{"name", r.name},      {"anchor", r.anchor},     {"field", "rational"},   {"shapes", shapes},
          {"samples", r.samples}, {"checks", r.checks},     {"rejected", r.rejected}, {"exact_zero", r.all_zero},
          {"failures", r.failures}};
}

inline CommandResult cmd_verify(const VerifyConfig& vc) {
  const std::vector<Suite> all = all_suites();
  std::vector<const Suite*> chosen;
  if (vc.suites.empty()) {
    for (const Suite& s : all) chosen.push_back(&s);
  } else {
    for (const std::string& name : vc.suites) {
      try {
        chosen.push_back(&find_suite(all, name));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
  }
  CommandResult out;
  json suites = json::array();
  json timing = json::object();
  bool pass = true;
  for (const Suite* s : chosen) {
    SuiteResult r;
    try {
      r = run_suite(*s, vc.seed, vc.samples, vc.threads, vc.range);
    } catch (const SamplingExhausted& e) {
      throw ConfigError(std::string("pole-rejection exhaustion: ") + e.what());
    }
    pass = pass && r.all_zero;
    suites.push_back(suite_json(r));
    timing[r.name] = r.elapsed_s;
  }
  out.report = {{"schema_version", kSchemaVersion},
                {"tool_version", kToolVersion},
                {"command", "verify"},
                {"seed", vc.seed},
                {"config", verify_config_json(vc)},
                {"suites", suites},
                {"solutions", json::array()},
                {"status", pass ? "pass" : "fail"},
                {"timing", {{"suites_s", timing}}}};
  out.exit_code = pass ? 0 : 1;
  return out;
}

// ---------------------------------------------------------------------------
// solve / residuals

struct SolveConfig {
  SolverParams params;
  std::vector<Complex> lambdas;
  CVec y;
  CycleW W;
  std::string out_csv;
  std::string out_json;
};

inline SolveConfig parse_solve_config(const json& root) {
  cfg::allow_keys(root, "config", {"mode", "model", "solve", "output"});
  if (root.contains("mode") && root.at("mode") != "solve" && root.at("mode") != "residuals")
    throw ConfigError("config.mode: expected \"solve\" or \"residuals\"");
  SolveConfig sc;
  if (!root.contains("model")) throw ConfigError("config: missing 'model'");
  if (!root.contains("solve")) throw ConfigError("config: missing 'solve'");
  const json& m = root.at("model");
  cfg::allow_keys(m, "model", {"n", "N", "c", "k"});
  sc.params.n = cfg::get<int>(m, "n", "model", 1);
  sc.params.N = cfg::get<int>(m, "N", "model", 2);
  if (m.contains("c")) sc.params.c = cfg::complex_value(m.at("c"), "model.c");
  if (m.contains("k")) sc.params.k = cfg::complex_value(m.at("k"), "model.k");

  const json& s = root.at("solve");
  cfg::allow_keys(s, "solve", {"lambda", "y", "W", "quadrature"});
  if (!s.contains("lambda") || !s.at("lambda").is_array() || s.at("lambda").empty())
    throw ConfigError("solve.lambda: expected a non-empty array");
  for (const json& l : s.at("lambda")) sc.lambdas.push_back(cfg::complex_value(l, "solve.lambda[]"));
  if (!s.contains("y") || !s.at("y").is_array()) throw ConfigError("solve.y: expected an array");
  for (const json& v : s.at("y")) {
    const Complex z = cfg::complex_value(v, "solve.y[]");
    if (z.imag() != 0.0) throw ConfigError("solve.y: coordinates must be real");
    sc.y.push_back(z);
  }
  if (!s.contains("W")) throw ConfigError("solve: missing 'W'");
  const json& w = s.at("W");
  cfg::allow_keys(w, "solve.W", {"degrees", "coeffs"});
  sc.W.degrees = cfg::get<std::vector<int>>(w, "degrees", "solve.W", {});
  if (w.contains("coeffs")) {
    for (const json& c : w.at("coeffs")) sc.W.coeffs.push_back(cfg::complex_value(c, "solve.W.coeffs[]"));
  } else {
    sc.W.coeffs.assign(sc.W.degrees.size(), Complex{1.0, 0.0});
  }
  if (s.contains("quadrature")) {
    const json& q = s.at("quadrature");
    cfg::allow_keys(q, "solve.quadrature", {"order", "panels_per_unit", "max_refine", "rtol", "atol"});
    QuadratureConfig& qc = sc.params.quad;
    qc.order = cfg::get<int>(q, "order", "solve.quadrature", qc.order);
    qc.panels_per_unit = cfg::get<double>(q, "panels_per_unit", "solve.quadrature", qc.panels_per_unit);
    qc.max_refine = cfg::get<int>(q, "max_refine", "solve.quadrature", qc.max_refine);
    qc.rtol = cfg::get<double>(q, "rtol", "solve.quadrature", qc.rtol);
    qc.atol = cfg::get<double>(q, "atol", "solve.quadrature", qc.atol);
    if (qc.order < 2 || qc.panels_per_unit <= 0 || qc.max_refine < 0 || !(qc.rtol > 0) || qc.atol < 0)
      throw ConfigError("solve.quadrature: out-of-range value");
  }
  if (root.contains("output")) {
    const json& o = root.at("output");
    cfg::allow_keys(o, "output", {"csv", "json"});
    sc.out_csv = cfg::get<std::string>(o, "csv", "output", "");
    sc.out_json = cfg::get<std::string>(o, "json", "output", "");
  }
  try {
    for (Complex l : sc.lambdas) validate_regime(sc.params, l, sc.y, sc.W);
  } catch (const RegimeError& e) {
    throw ConfigError(e.what());
  }
  return sc;
}

inline json solve_config_json(const SolveConfig& sc) {
  const QuadratureConfig& q = sc.params.quad;
  return {{"mode", "solve"},
          {"model",
           {{"n", sc.params.n}, {"N", sc.params.N}, {"c", cfg::complex_json(sc.params.c)}, {"k", cfg::complex_json(sc.params.k)}}},
          {"solve",
           {{"lambda", cfg::cvec_json(CVec(sc.lambdas.begin(), sc.lambdas.end()))},
            {"y", cfg::cvec_json(sc.y)},
            {"W", {{"degrees", sc.W.degrees}, {"coeffs", cfg::cvec_json(sc.W.coeffs)}}},
            {"quadrature",
             {{"order", q.order},
              {"panels_per_unit", q.panels_per_unit},
              {"max_refine", q.max_refine},
              {"rtol", q.rtol},
              {"atol", q.atol}}}}}};
}

inline json solution_json(const ResidualReport& r, const SolverParams& sp) {
  const SolutionVector& s = r.solution;
  const bool pass = r.qkz_max <= kSolveTolerance && r.ode <= kSolveTolerance && r.ode_tilde <= kSolveTolerance;
  return {{"lambda", cfg::complex_json(s.lambda)},
          {"y", cfg::cvec_json(s.y)},
          {"alpha", cfg::complex_json(sp.alpha())},
          {"beta", cfg::complex_json(sp.alpha())},
          {"coeffs", cfg::cvec_json(s.coeffs)},
          {"residuals",
           {{"qkz", r.qkz}, {"qkz_max", r.qkz_max}, {"ode", r.ode}, {"ode_tilde", r.ode_tilde}, {"tolerance", kSolveTolerance}}},
          {"diagnostics",
           {{"T", s.diag.T},
            {"panels", s.diag.panels},
            {"refinements", s.diag.refinements},
            {"error_estimate", s.diag.error_estimate},
            {"endpoint_ratio", s.diag.endpoint_ratio}}},
          {"contour",
           {{"delta", s.contour.delta},
            {"y_points", s.contour.y_points},
            {"poles_checked", s.contour.poles_checked},
            {"min_gap_above", s.contour.min_gap_above},
            {"min_gap_below", s.contour.min_gap_below}}},
          {"pass", pass}};
}

inline std::string solution_csv(const std::vector<ResidualReport>& rs) {
  std::ostringstream os;
  os.precision(17);
  os << "lambda_re,lambda_im,j,coeff_re,coeff_im\n";
  for (const ResidualReport& r : rs)
    for (std::size_t j = 0; j < r.solution.coeffs.size(); ++j) {
      const Complex l = r.solution.lambda, c = r.solution.coeffs[j];
      os << l.real() << ',' << l.imag() << ',' << j + 1 << ',' << c.real() << ',' << c.imag() << '\n';
    }
  return os.str();
}

struct SolveOutcome {
  CommandResult result;
  std::string csv;
};

inline SolveOutcome cmd_solve(const SolveConfig& sc, const char* command = "solve") {
  SolveOutcome out;
  std::vector<ResidualReport> reports;
  json solutions = json::array();
  json timing = json::array();
  bool pass = true;
  for (Complex lambda : sc.lambdas) {
    const auto start = std::chrono::steady_clock::now();
    ResidualReport r;
    try {
      r = residual_report(lambda, sc.y, sc.W, sc.params);
    } catch (const RegimeError& e) {
      throw ConfigError(e.what());
    }
    timing.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    json sj = solution_json(r, sc.params);
    pass = pass && sj.at("pass").get<bool>();
    solutions.push_back(std::move(sj));
    reports.push_back(std::move(r));
  }
  out.csv = solution_csv(reports);
  out.result.report = {{"schema_version", kSchemaVersion},
                       {"tool_version", kToolVersion},
                       {"command", command},
                       {"seed", nullptr},
                       {"config", solve_config_json(sc)},
                       {"suites", json::array()},
                       {"solutions", solutions},
                       {"status", pass ? "pass" : "fail"},
                       {"timing", {{"solutions_s", timing}}}};
  out.result.exit_code = pass ? 0 : 1;
  return out;
}

/// Recomputes the residuals of a prior solve report and compares them with
/// the embedded values.
inline CommandResult cmd_residuals_from_report(const json& prior) {
  if (!prior.is_object() || !prior.contains("schema_version")) throw ConfigError("input is not a bqkz report");
  if (prior.at("schema_version") != kSchemaVersion)
    throw ConfigError("unsupported schema_version " + prior.at("schema_version").dump());
  if (!prior.contains("config") || !prior.contains("solutions")) throw ConfigError("report lacks config or solutions");
  const SolveConfig sc = parse_solve_config(prior.at("config"));
  SolveOutcome fresh = cmd_solve(sc, "residuals");
  const json& old_sol = prior.at("solutions");
  json& new_sol = fresh.result.report["solutions"];
  if (old_sol.size() != new_sol.size()) throw ConfigError("report solution count does not match its config");
  double max_diff = 0.0;
  for (std::size_t i = 0; i < new_sol.size(); ++i) {
    const json& a = old_sol[i].at("residuals");
    const json& b = new_sol[i].at("residuals");
    for (const char* key : {"qkz_max", "ode", "ode_tilde"})
      max_diff = std::max(max_diff, std::abs(a.at(key).get<double>() - b.at(key).get<double>()));
  }
  const bool match = max_diff <= kRecomputeTolerance;
  fresh.result.report["recomputation"] = {{"max_abs_difference", max_diff}, {"tolerance", kRecomputeTolerance}, {"match", match}};
  if (!match) {
    fresh.result.report["status"] = "fail";
    fresh.result.exit_code = 1;
  }
  // keep timing last
  json timing = fresh.result.report["timing"];
  fresh.result.report.erase("timing");
  fresh.result.report["timing"] = timing;
  return fresh.result;
}

}  // namespace bqkz
