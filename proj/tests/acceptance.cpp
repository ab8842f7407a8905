// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <exception>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bqkz/integral.hpp"
#include "bqkz/report.hpp"
#include "bqkz/scalar.hpp"
#include "bqkz/verify.hpp"

namespace {

using namespace bqkz;

constexpr std::uint64_t kSeed = 20240917;

struct Outcome {
  bool ok = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// Runs the named suites; passes when every residual is exactly zero.
Outcome exact_suites(const std::vector<std::string>& names, std::size_t samples) {
  const auto all = all_suites();
  Outcome o;
  std::ostringstream os;
  for (const std::string& name : names) {
    const SuiteResult r = run_suite(find_suite(all, name), kSeed, samples);
    os << name << ": " << r.samples << " pts x " << r.shapes.size() << " shapes, " << r.checks << " checks, "
       << (r.all_zero ? "exact zero" : "NONZERO");
    if (!r.all_zero) {
      o.ok = false;
      os << " [" << r.failures.front() << "]";
    }
    os << "; ";
  }
  o.detail = os.str();
  return o;
}

Outcome with_budget(Outcome o, double elapsed, double budget) {
  std::ostringstream os;
  os.precision(3);
  os << o.detail << "budget " << budget << " s";
  o.detail = os.str();
  if (elapsed >= budget) o.ok = false;
  return o;
}

SolverParams regime_params(int n) {
  SolverParams sp;
  sp.n = n;
  sp.N = 2;
  sp.c = {0.0, 0.2};
  sp.k = {0.0, 1.0};
  return sp;
}

Outcome integral_suite() {
  struct Case {
    int n;
    Complex lambda;
    CVec y;
    CycleW W;
  };
  const std::vector<Case> cases{
      {1, {-0.35, 0.0}, {{0.37, 0.0}}, CycleW::monomial(0)},
      {1, {0.3, 0.0}, {{0.37, 0.0}}, CycleW::monomial(1)},
      {1, {0.7, 0.0}, {{-0.52, 0.0}}, CycleW{{1}, {{0.4, 1.1}}}},
      {2, {0.3, 0.0}, {{0.37, 0.0}, {-0.81, 0.0}}, CycleW::monomial(1)},
      {2, {0.7, 0.0}, {{0.37, 0.0}, {-0.81, 0.0}}, CycleW::monomial(2)},
      {2, {-0.4, 0.0}, {{0.21, 0.0}, {0.64, 0.0}}, CycleW{{0, 1}, {{1.0, 0.0}, {-0.5, 0.25}}}},
  };
  Outcome o;
  std::ostringstream os;
  os.precision(2);
  double worst = 0.0;
  for (const Case& c : cases) {
    const ResidualReport r = residual_report(c.lambda, c.y, c.W, regime_params(c.n));
    const double m = std::max({r.qkz_max, r.ode, r.ode_tilde});
    worst = std::max(worst, m);
    if (!(m <= kSolveTolerance)) o.ok = false;
  }
  os << cases.size() << " configs (3 per n), max residual " << worst << " (tol 1e-7); ";

  SolverParams sp = regime_params(1);
  sp.c = {0.1, 0.2};
  sp.k = {0.05, 1.0};
  const Complex lambda{-0.5, 0.0};
  const CVec y{{0.3, 0.0}};
  const CycleW W = CycleW::monomial(0);
  const PairingResult pr = pair_all(sp, lambda, y, W);
  const CVec s = integrate_simpson(pairing_integrand(sp, lambda, y, W), 4, sp.delta(), pr.diag.T, 1e-12 * max_norm(pr.values));
  double rel = 0.0;
  for (std::size_t j = 0; j < 2; ++j) rel = std::max(rel, std::abs(pr.values[j] - s[j]) / std::abs(s[j]));
  if (!(rel <= 1e-8)) o.ok = false;
  os << "Simpson oracle rel diff " << rel << " (tol 1e-8); ";
  o.detail = os.str();
  return o;
}

Outcome log_gamma_floor() {
  Outcome o;
  std::mt19937_64 eng(7);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  double rec = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Complex z{u(eng), u(eng)};
    const Complex next = log_gamma(z + 1.0);
    rec = std::max(rec, std::abs(next - log_gamma(z) - std::log(z)) / (1.0 + std::abs(next)));
  }
  std::uniform_real_distribution<double> im(-10.0, 10.0);
  double refl = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Complex z{u(eng), im(eng)};
    if (std::abs(z.imag()) < 1e-3) z += Complex{0.0, 0.5};
    const Complex lhs = std::exp(log_gamma(z) + log_gamma(1.0 - z));
    const Complex rhs = std::numbers::pi / std::sin(std::numbers::pi * z);
    refl = std::max(refl, std::abs(lhs - rhs) / std::abs(rhs));
  }
  o.ok = rec <= 1e-12 && refl <= 1e-11;
  std::ostringstream os;
  os.precision(2);
  os << "recurrence max rel " << rec << " (tol 1e-12), reflection max rel " << refl << " (tol 1e-11); ";
  o.detail = os.str();
  return o;
}

Outcome determinism() {
  Outcome o;
  VerifyConfig vc;
  vc.seed = kSeed;
  vc.samples = 10;
  vc.suites = {"ybe", "bybe", "compatibility", "phi-iso"};
  const std::string a = report_body(cmd_verify(vc).report);
  const std::string b = report_body(cmd_verify(vc).report);
  SolveConfig sc;
  sc.params = regime_params(1);
  sc.lambdas = {{0.3, 0.0}, {0.7, 0.0}};
  sc.y = {{0.37, 0.0}};
  sc.W = CycleW::monomial(1);
  const std::string c = report_body(cmd_solve(sc).result.report);
  const std::string d = report_body(cmd_solve(sc).result.report);
  o.ok = a == b && c == d;
  o.detail = std::string("verify body ") + (a == b ? "identical" : "DIFFERS") + " (" + std::to_string(a.size()) +
             " bytes), solve body " + (c == d ? "identical" : "DIFFERS") + " (" + std::to_string(c.size()) + " bytes); ";
  return o;
}

struct Criterion {
  std::string name;
  double budget;  // seconds; 0 = none
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"yang-baxter and boundary yang-baxter, N=1..3, 100 points", 30.0,
       [] { return exact_suites({"ybe", "bybe"}, 100); }},
      {"qkz consistency, all (l,m), 100 points", 120.0, [] { return exact_suites({"qkz-consistency"}, 100); }},
      {"commutativity of A and L, cross-derivative, M conjugation, 100 points", 0.0,
       [] { return exact_suites({"lemma-AA", "lemma-LL", "cross-derivative", "comm-IM"}, 100); }},
      {"compatibility, three-term and direct forms, 100 points", 600.0,
       [] { return exact_suites({"compatibility"}, 100); }},
      {"affine Hecke module: phi bijective, relations, Cbar = Q^-1, 50 points", 0.0,
       [] { return exact_suites({"phi-iso", "aha-relations", "cbar-qinv"}, 50); }},
      {"integral solutions: qkz, ODE and ftilde residuals, Simpson oracle", 300.0, integral_suite},
      {"log gamma recurrence and reflection", 0.0, log_gamma_floor},
      {"deterministic report body", 0.0, determinism},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what() + "; "};
    }
    const double elapsed = seconds_since(start);
    if (c.budget > 0.0) o = with_budget(o, elapsed, c.budget);
    if (!o.ok) ++failed;
    std::printf("%s  %-72s %8.2fs  %s\n", o.ok ? "PASS" : "FAIL", c.name.c_str(), elapsed, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
