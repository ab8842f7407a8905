// bqkz: exact verification campaigns and numerical solutions from the command line.
//
//   bqkz verify --config <file> [--suite <name>]* [--seed <u64>] [--samples <int>] [--out <path>]
//   bqkz solve --config <file> [--out-csv <path>] [--out-json <path>]
//   bqkz residuals (--in <report> | --config <file>) [--out <path>]
//
// Exit status: 0 all pass, 1 verification failure, 2 configuration or regime error.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bqkz/report.hpp"

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw bqkz::ConfigError("cannot write '" + path + "'");
  out << text;
}

void emit(const bqkz::json& report, const std::string& path) {
  const std::string text = report.dump(2) + "\n";
  if (path.empty()) {
    std::cout << text;
  } else {
    write_text(path, text);
  }
}

void summarize(const bqkz::json& report) {
  for (const auto& s : report.at("suites"))
    std::cerr << (s.at("exact_zero").get<bool>() ? "PASS " : "FAIL ") << s.at("name").get<std::string>() << "  ["
              << s.at("anchor").get<std::string>() << "]  samples=" << s.at("samples") << " checks=" << s.at("checks")
              << "\n";
  for (const auto& s : report.at("solutions"))
    std::cerr << (s.at("pass").get<bool>() ? "PASS " : "FAIL ") << "lambda=" << s.at("lambda").dump()
              << " qkz=" << s.at("residuals").at("qkz_max") << " ode=" << s.at("residuals").at("ode")
              << " ode_tilde=" << s.at("residuals").at("ode_tilde") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"boundary rational qKZ: exact identity verification and integral solutions"};
  app.require_subcommand(1);

  std::string v_config, v_out;
  std::vector<std::string> v_suites;
  std::optional<std::uint64_t> v_seed;
  std::optional<long> v_samples;
  auto* verify = app.add_subcommand("verify", "run exact identity suites at seeded rational points");
  verify->add_option("--config", v_config, "JSON config")->required();
  verify->add_option("--suite", v_suites, "suite name (repeatable)");
  verify->add_option("--seed", v_seed, "base seed");
  verify->add_option("--samples", v_samples, "points per suite and shape");
  verify->add_option("--out", v_out, "report path (default stdout)");

  std::string s_config, s_csv, s_json;
  auto* solve = app.add_subcommand("solve", "evaluate the integral solution over a lambda grid");
  solve->add_option("--config", s_config, "JSON config")->required();
  solve->add_option("--out-csv", s_csv, "coefficient table");
  solve->add_option("--out-json", s_json, "report path");

  std::string r_in, r_config, r_out;
  auto* residuals = app.add_subcommand("residuals", "recompute residuals from a solve report or a config");
  auto* in_opt = residuals->add_option("--in", r_in, "prior solve report");
  auto* cfg_opt = residuals->add_option("--config", r_config, "JSON config");
  in_opt->excludes(cfg_opt);
  residuals->add_option("--out", r_out, "report path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*verify) {
      bqkz::VerifyConfig vc = bqkz::parse_verify_config(bqkz::read_json_file(v_config));
      if (!v_suites.empty()) vc.suites = v_suites;
      if (v_seed) vc.seed = *v_seed;
      if (v_samples) {
        if (*v_samples < 1) throw bqkz::ConfigError("--samples must be positive");
        vc.samples = static_cast<std::size_t>(*v_samples);
      }
      const bqkz::CommandResult res = bqkz::cmd_verify(vc);
      summarize(res.report);
      emit(res.report, v_out);
      return res.exit_code;
    }
    if (*solve) {
      bqkz::SolveConfig sc = bqkz::parse_solve_config(bqkz::read_json_file(s_config));
      if (!s_csv.empty()) sc.out_csv = s_csv;
      if (!s_json.empty()) sc.out_json = s_json;
      const bqkz::SolveOutcome out = bqkz::cmd_solve(sc);
      summarize(out.result.report);
      if (!sc.out_csv.empty()) {
        write_text(sc.out_csv, out.csv);
      } else {
        std::cout << out.csv;
      }
      if (!sc.out_json.empty()) emit(out.result.report, sc.out_json);
      return out.result.exit_code;
    }
    if (*residuals) {
      bqkz::CommandResult res;
      if (!r_in.empty()) {
        res = bqkz::cmd_residuals_from_report(bqkz::read_json_file(r_in));
      } else if (!r_config.empty()) {
        res = bqkz::cmd_solve(bqkz::parse_solve_config(bqkz::read_json_file(r_config)), "residuals").result;
      } else {
        throw bqkz::ConfigError("residuals needs --in <report> or --config <file>");
      }
      summarize(res.report);
      emit(res.report, r_out);
      return res.exit_code;
    }
  } catch (const bqkz::ConfigError& e) {
    std::cerr << "bqkz: error: " << e.what() << "\n";
    return 2;
  } catch (const bqkz::RegimeError& e) {
    std::cerr << "bqkz: error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "bqkz: failure: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
