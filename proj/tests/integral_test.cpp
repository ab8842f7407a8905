#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "bqkz/integral.hpp"
#include "bqkz/rqkz.hpp"

namespace {

using namespace bqkz;

SolverParams base_params(int n) {
  SolverParams sp;
  sp.n = n;
  sp.N = 2;
  sp.c = {0.0, 0.2};
  sp.k = {0.0, 1.0};
  return sp;
}

double rel(Complex a, Complex b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

struct RandomT {
  std::mt19937_64 eng;
  std::uniform_real_distribution<double> re{-3.0, 3.0};
  std::uniform_real_distribution<double> im{-0.9, 0.9};
  explicit RandomT(std::uint64_t seed) : eng(seed) {}
  Complex operator()() { return {re(eng), im(eng)}; }
};

TEST(VecU, SingleSite) {
  const auto u = vec_u_all(1, 2);
  ASSERT_EQ(u.size(), 2u);
  EXPECT_EQ(u[0], Vec<Complex>::basis(Space(1, 2), static_cast<std::size_t>(label_code(lab(1), 2))));
  EXPECT_EQ(u[1], Vec<Complex>::basis(Space(1, 2), static_cast<std::size_t>(label_code(labbar(1), 2))));
  EXPECT_THROW(vec_u(3, 1, 2), std::out_of_range);
}

TEST(VecU, VtildeConditions) {
  for (int n = 2; n <= 4; ++n) {
    const Vec<Complex> vt = default_vtilde(n, 2);
    const Space sp = vt.space();
    for (int i = 1; i + 1 <= n - 1; ++i) EXPECT_EQ(embed_pair(swap_op<Complex>(2), i, i + 1, sp) * vt, vt);
    EXPECT_EQ(embed_site(op_T(unit_x<Complex>(2)), n - 1, sp) * vt, vt);
    EXPECT_GT(max_abs(vt), 0.0);
  }
  EXPECT_THROW(default_vtilde(2, 1), std::invalid_argument);
}

TEST(VecU, Placement) {
  const auto u = vec_u_all(2, 2);
  const Space sp(2, 2);
  auto at = [&](const Vec<Complex>& v, Label a, Label b) {
    const std::vector<Label> l{a, b};
    return v.at(linear_index(sp, l));
  };
  EXPECT_EQ(at(u[0], lab(1), lab(2)), Complex(1.0));
  EXPECT_EQ(at(u[0], lab(1), labbar(2)), Complex(1.0));
  EXPECT_EQ(at(u[1], lab(2), lab(1)), Complex(1.0));
  EXPECT_EQ(at(u[2], lab(2), labbar(1)), Complex(1.0));
  EXPECT_EQ(at(u[2], labbar(2), labbar(1)), Complex(1.0));
  EXPECT_EQ(at(u[3], labbar(1), lab(2)), Complex(1.0));
  EXPECT_EQ(at(u[3], labbar(1), labbar(2)), Complex(1.0));
}

TEST(VecU, LinearlyIndependent) {
  for (int n = 1; n <= 3; ++n) {
    const auto u = vec_u_all(n, 2);
    EXPECT_EQ(rank(std::span<const Vec<Complex>>(u)), static_cast<std::size_t>(2 * n));
  }
}

TEST(FuncG, SingleSite) {
  const CVec y{{0.3, 0.0}};
  const Complex k{0.05, 1.0};
  RandomT rt(1);
  for (int i = 0; i < 20; ++i) {
    const Complex t = rt();
    EXPECT_LE(rel(func_g(1, t, y, k), 1.0 / (t - y[0])), 1e-14);
    EXPECT_LE(rel(func_g(2, t, y, k), (t - y[0] - k) / ((t + y[0]) * (t - y[0]))), 1e-14);
  }
  EXPECT_THROW(func_g(1, y[0], y, k), PoleError);
  EXPECT_THROW(func_g(3, Complex{1.0}, y, k), std::out_of_range);
}

CVec test_y(int n) {
  const CVec all{{0.37, 0.0}, {-0.81, 0.0}, {1.13, 0.0}};
  return {all.begin(), all.begin() + n};
}

// prod_{l in [lo, hi]} (t + s y_l - k)/(t + s y_l)
Complex ratio_product(Complex t, const CVec& y, Complex k, int lo, int hi, double s) {
  Complex r{1.0, 0.0};
  for (int l = lo; l <= hi; ++l) {
    const Complex v = s * y[static_cast<std::size_t>(l - 1)];
    r *= (t + v - k) / (t + v);
  }
  return r;
}

TEST(FuncG, TelescopingForm) {
  const Complex k{0.05, 1.0};
  for (int n = 1; n <= 3; ++n) {
    const CVec y = test_y(n);
    RandomT rt(10 + n);
    for (int i = 0; i < 50; ++i) {
      const Complex t = rt();
      const Complex all_minus = ratio_product(t, y, k, 1, n, -1.0);
      for (int j = 1; j <= n; ++j) {
        const Complex front = (ratio_product(t, y, k, 1, j - 1, -1.0) - ratio_product(t, y, k, 1, j, -1.0)) / k;
        EXPECT_LE(rel(func_g(j, t, y, k), front), 1e-12);
        const Complex back =
            (ratio_product(t, y, k, j + 1, n, 1.0) - ratio_product(t, y, k, j, n, 1.0)) / k * all_minus;
        EXPECT_LE(rel(func_g(2 * n + 1 - j, t, y, k), back), 1e-12);
      }
    }
  }
}

TEST(FuncG, DerivativeCombination) {
  const Complex k{0.05, 1.0};
  const Complex lambda{0.3, 0.1};
  const Complex x = std::exp(kTwoPi * kI * lambda);
  for (int n = 1; n <= 3; ++n) {
    const CVec y = test_y(n);
    RandomT rt(20 + n);
    for (int i = 0; i < 50; ++i) {
      const Complex t = rt();
      std::vector<Complex> g(static_cast<std::size_t>(2 * n + 1));
      for (int j = 1; j <= 2 * n; ++j) g[static_cast<std::size_t>(j)] = func_g(j, t, y, k);
      auto sum = [&](int lo, int hi) {
        Complex s{0.0, 0.0};
        for (int l = lo; l <= hi; ++l) s += g[static_cast<std::size_t>(l)];
        return s;
      };
      const Complex prod = ratio_product(t, y, k, 1, n, -1.0) * ratio_product(t, y, k, 1, n, 1.0);
      // the remainder carries 1/(x - 1); it integrates to zero against phi W
      const Complex tail = (1.0 - x * prod) / (x - 1.0);
      for (int j = 1; j <= n; ++j) {
        const Complex yj = y[static_cast<std::size_t>(j - 1)];
        const int jb = 2 * n + 1 - j;
        const Complex h = -(t - yj) * g[static_cast<std::size_t>(j)] + k / (x - 1.0) * sum(1, j - 1) +
                          k * x / (x - 1.0) * sum(j + 1, 2 * n);
        const Complex hb = -(t + yj) * g[static_cast<std::size_t>(jb)] + k / (x - 1.0) * sum(1, jb - 1) +
                           k * x / (x - 1.0) * sum(jb + 1, 2 * n);
        EXPECT_LE(std::abs(h + k * x / (x - 1.0) * g[static_cast<std::size_t>(j)] - tail), 1e-12 * (1.0 + std::abs(tail)));
        EXPECT_LE(std::abs(hb + k * x / (x - 1.0) * g[static_cast<std::size_t>(jb)] - tail), 1e-12 * (1.0 + std::abs(tail)));
        EXPECT_GT(std::abs(tail), 1e-6);
      }
    }
  }
}

TEST(Kernel, ShiftInT) {
  const Complex c{0.1, 0.2}, k{0.05, 1.0}, lambda{0.3, 0.0};
  const Complex x = std::exp(kTwoPi * kI * lambda);
  for (int n = 1; n <= 2; ++n) {
    const CVec y = test_y(n);
    RandomT rt(30 + n);
    for (int i = 0; i < 50; ++i) {
      const Complex t = rt();
      const Complex ratio = std::exp(log_kernel(t - c, y, lambda, c, k) - log_kernel(t, y, lambda, c, k));
      const Complex expected = x * ratio_product(t, y, k, 1, n, -1.0) * ratio_product(t, y, k, 1, n, 1.0);
      EXPECT_LE(rel(ratio, expected), 1e-10) << "t=" << t;
    }
  }
}

TEST(Kernel, ShiftInY) {
  const Complex c{0.1, 0.2}, k{0.05, 1.0}, lambda{0.3, 0.0};
  for (int n = 1; n <= 2; ++n) {
    const CVec y = test_y(n);
    CVec y2 = y;
    y2[0] -= c;
    RandomT rt(40 + n);
    for (int i = 0; i < 50; ++i) {
      const Complex t = rt();
      const Complex ratio = std::exp(log_kernel(t, y2, lambda, c, k) - log_kernel(t, y, lambda, c, k));
      const Complex y1 = y[0];
      const Complex expected = (t + y1 - k) / (t + y1) * (t - y1 + c) / (t - y1 - k + c);
      EXPECT_LE(rel(ratio, expected), 1e-10) << "t=" << t;
    }
  }
}

TEST(Kernel, GFractionMatchesKernelShift) {
  const Complex c{0.1, 0.2}, k{0.05, 1.0};
  const int n = 3;
  const CVec y = test_y(n);
  CVec y1 = y, y2 = y;
  y1[0] = -y[0];
  y2[0] -= c;
  RandomT rt(45);
  for (int i = 0; i < 50; ++i) {
    const Complex t = rt();
    const Complex expected = (t + y[0] - k) / (t + y[0]) * (t - y[0] + c) / (t - y[0] - k + c);
    for (int j = 2; j < 2 * n; ++j) EXPECT_LE(rel(func_g(j, t, y1, k) / func_g(j, t, y2, k), expected), 1e-10);
  }
}

TEST(Kernel, Symmetries) {
  const Complex c{0.1, 0.2}, k{0.05, 1.0}, lambda{0.3, 0.0};
  const CVec y = test_y(2);
  RandomT rt(50);
  for (int i = 0; i < 50; ++i) {
    const Complex t = rt();
    const Complex base = kernel_phi(t, y, lambda, c, k);
    EXPECT_LE(rel(kernel_phi(t, CVec{y[1], y[0]}, lambda, c, k), base), 1e-13);
    EXPECT_LE(rel(kernel_phi(t, CVec{y[0], -y[1]}, lambda, c, k), base), 1e-13);
  }
}

TEST(GTilde, IntertwiningRelations) {
  const Complex k{0.05, 1.0};
  const int N = 2;
  for (int n = 1; n <= 3; ++n) {
    const CVec y = test_y(n);
    const Space sp(n, N);
    RandomT rt(60 + n);
    for (int i = 0; i < 50; ++i) {
      const Complex t = rt();
      const Vec<Complex> g = g_tilde(t, y, k, N);
      const double scale = max_abs(g);
      for (int l = 1; l < n; ++l) {
        CVec ys = y;
        std::swap(ys[static_cast<std::size_t>(l - 1)], ys[static_cast<std::size_t>(l)]);
        const LinOp<Complex> PR = embed_pair(swap_op<Complex>(N), l, l + 1, sp) *
                                  embed_pair(op_R(y[static_cast<std::size_t>(l - 1)] - y[static_cast<std::size_t>(l)], k, N),
                                             l, l + 1, sp);
        EXPECT_LE(max_abs(PR * g - g_tilde(t, ys, k, N)), 1e-10 * scale);
      }
      CVec yr = y;
      yr.back() = -yr.back();
      const LinOp<Complex> K = embed_site(op_K(y.back(), unit_x<Complex>(N), k / 2.0), n, sp);
      EXPECT_LE(max_abs(K * g - g_tilde(t, yr, k, N)), 1e-10 * scale);
    }
  }
}

TEST(Contour, RegimeOfTheExamples) {
  SolverParams sp = base_params(1);
  EXPECT_DOUBLE_EQ(sp.delta(), 0.5);
  const ContourRecord rec = validate_contour(sp, test_y(1), 20.0);
  EXPECT_EQ(rec.y_points, 2);
  EXPECT_GT(rec.poles_checked, 0);
  // upper pole y_1 + k - c of the shifted point, lower pole -(y_1 - c)
  EXPECT_NEAR(rec.min_gap_above, 0.3, 1e-12);
  EXPECT_NEAR(rec.min_gap_below, 0.3, 1e-12);
  sp.n = 2;
  const ContourRecord rec2 = validate_contour(sp, test_y(2), 20.0);
  EXPECT_EQ(rec2.y_points, 3);
  EXPECT_NEAR(rec2.min_gap_above, 0.3, 1e-12);
}

TEST(Contour, RejectsSeparationFailure) {
  SolverParams sp = base_params(1);
  sp.c = {0.1, 0.9};
  sp.k = {0.05, 1.0};
  try {
    validate_contour(sp, test_y(1), 20.0);
    FAIL() << "expected a separation failure";
  } catch (const RegimeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("above the contour"), std::string::npos) << msg;
    EXPECT_NE(msg.find("(0.32+0.1i)"), std::string::npos) << msg;
  }
  EXPECT_THROW(validate_regime(sp, {0.3, 0.0}, test_y(1), CycleW::monomial(1)), RegimeError);
}

TEST(Regime, Violations) {
  const SolverParams sp = base_params(1);
  const CycleW W = CycleW::monomial(1);
  EXPECT_NO_THROW(validate_regime(sp, {0.3, 0.0}, test_y(1), W));
  try {
    validate_regime(sp, {0.3, 0.0}, test_y(1), CycleW::monomial(3));
    FAIL() << "expected a degree violation";
  } catch (const RegimeError& e) {
    EXPECT_NE(std::string(e.what()).find("degree condition"), std::string::npos);
  }
  EXPECT_THROW(validate_regime(sp, {0.3, 0.0}, CVec{{0.3, 0.6}}, W), RegimeError);
  SolverParams bad = sp;
  bad.k = {0.0, -1.0};
  EXPECT_THROW(validate_regime(bad, {0.3, 0.0}, test_y(1), W), RegimeError);
  bad = base_params(2);
  bad.N = 1;
  EXPECT_THROW(validate_regime(bad, {0.3, 0.0}, test_y(2), CycleW::monomial(1)), RegimeError);
  EXPECT_THROW(pair_I(1, sp, {0.3, 0.0}, test_y(1), CycleW::monomial(0)), RegimeError);
}

TEST(Quadrature, GaussLegendreExactOnPolynomials) {
  std::vector<double> x, w;
  gauss_legendre(10, x, w);
  for (int p = 0; p < 20; ++p) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], p);
    const double exact = p % 2 ? 0.0 : 2.0 / (p + 1);
    EXPECT_NEAR(s, exact, 1e-14) << "p=" << p;
  }
}

struct OracleCase {
  SolverParams sp;
  Complex lambda;
  CVec y;
  CycleW W;
};

OracleCase simpson_case() {
  OracleCase oc{base_params(1), {-0.5, 0.0}, {{0.3, 0.0}}, CycleW::monomial(0)};
  oc.sp.c = {0.1, 0.2};
  oc.sp.k = {0.05, 1.0};
  return oc;
}

TEST(PairI, EndpointsDecay) {
  const OracleCase oc = simpson_case();
  const PairingResult pr = pair_all(oc.sp, oc.lambda, oc.y, oc.W);
  EXPECT_LE(pr.diag.endpoint_ratio, oc.sp.quad.decay);
  const VectorIntegrand f = pairing_integrand(oc.sp, oc.lambda, oc.y, oc.W);
  double peak = 0.0;
  for (int s = -400; s <= 400; ++s) peak = std::max(peak, max_norm(f(Complex{pr.diag.T * s / 400.0, oc.sp.delta()})));
  EXPECT_LE(max_norm(f(Complex{pr.diag.T, oc.sp.delta()})), oc.sp.quad.decay * peak);
  EXPECT_LE(max_norm(f(Complex{-pr.diag.T, oc.sp.delta()})), oc.sp.quad.decay * peak);
}

TEST(PairI, MatchesAdaptiveSimpson) {
  const OracleCase oc = simpson_case();
  const PairingResult pr = pair_all(oc.sp, oc.lambda, oc.y, oc.W);
  const VectorIntegrand f = pairing_integrand(oc.sp, oc.lambda, oc.y, oc.W);
  const double scale = max_norm(pr.values);
  const CVec s = integrate_simpson(f, 4, oc.sp.delta(), pr.diag.T, 1e-12 * scale);
  for (int j = 0; j < 2; ++j) {
    EXPECT_LE(rel(pr.values[static_cast<std::size_t>(j)], s[static_cast<std::size_t>(j)]), 1e-8) << "j=" << j + 1;
    EXPECT_GT(std::abs(pr.values[static_cast<std::size_t>(j)]), 0.0);
  }
  EXPECT_EQ(pair_I(1, oc.sp, oc.lambda, oc.y, oc.W), pr.values[0]);
}

TEST(PairI, LinearInW) {
  const SolverParams sp = base_params(2);
  const Complex lambda{0.4, 0.0};
  const CVec y = test_y(2);
  const CycleW w1 = CycleW::monomial(1, {0.7, -0.2});
  const CycleW w2 = CycleW::monomial(2, {-1.3, 0.5});
  const CycleW sum{{1, 2}, {w1.coeffs[0], w2.coeffs[0]}};
  const PairingResult a = pair_all(sp, lambda, y, w1), b = pair_all(sp, lambda, y, w2), ab = pair_all(sp, lambda, y, sum);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_LE(rel(a.values[j] + b.values[j], ab.values[j]), 1e-10) << "j=" << j + 1;
}

TEST(PairI, DoublingPanelsWithinErrorEstimate) {
  for (const OracleCase& oc : {simpson_case(), OracleCase{base_params(2), {0.7, 0.0}, test_y(2), CycleW::monomial(2)}}) {
    const PairingResult pr = pair_all(oc.sp, oc.lambda, oc.y, oc.W);
    const VectorIntegrand f = pairing_integrand(oc.sp, oc.lambda, oc.y, oc.W);
    const std::size_t width = static_cast<std::size_t>(4 * oc.sp.n);
    const CVec twice = integrate_line(f, width, oc.sp.delta(), pr.diag.T, 2 * pr.diag.panels, oc.sp.quad.order);
    double diff = 0.0;
    for (std::size_t j = 0; j < static_cast<std::size_t>(2 * oc.sp.n); ++j) diff = std::max(diff, std::abs(twice[j] - pr.values[j]));
    EXPECT_LE(diff, pr.diag.error_estimate) << "n=" << oc.sp.n;
  }
}

TEST(PairI, NonConvergenceIsReported) {
  OracleCase oc = simpson_case();
  oc.sp.quad.max_refine = 1;
  oc.sp.quad.rtol = 1e-30;
  oc.sp.quad.atol = 0.0;
  try {
    pair_all(oc.sp, oc.lambda, oc.y, oc.W);
    FAIL() << "expected non-convergence";
  } catch (const QuadratureError& e) {
    EXPECT_NE(std::string(e.what()).find("did not converge"), std::string::npos);
  }
}

struct Config {
  int n;
  Complex lambda;
  CycleW W;
};

std::vector<Config> residual_configs() {
  return {
      {1, {-0.35, 0.0}, CycleW::monomial(0)},
      {1, {0.3, 0.0}, CycleW::monomial(1)},
      {1, {0.7, 0.0}, CycleW{{1}, {{0.4, 1.1}}}},
      {2, {0.3, 0.0}, CycleW::monomial(1)},
      {2, {0.7, 0.0}, CycleW::monomial(2)},
      {2, {-0.4, 0.0}, CycleW{{0, 1}, {{1.0, 0.0}, {-0.5, 0.25}}}},
  };
}

TEST(Solution, ResidualsSmall) {
  for (const Config& cfg : residual_configs()) {
    const SolverParams sp = base_params(cfg.n);
    const ResidualReport r = residual_report(cfg.lambda, test_y(cfg.n), cfg.W, sp);
    const std::string tag = "n=" + std::to_string(cfg.n) + " lambda=" + fmt_complex(cfg.lambda);
    ASSERT_EQ(r.qkz.size(), static_cast<std::size_t>(cfg.n));
    EXPECT_LE(r.qkz_max, 1e-7) << tag;
    EXPECT_LE(r.ode, 1e-7) << tag;
    EXPECT_LE(r.ode_tilde, 1e-7) << tag;
    EXPECT_EQ(r.solution.coeffs.size(), static_cast<std::size_t>(2 * cfg.n));
    EXPECT_GT(max_abs(r.solution.f), 0.0) << tag;
  }
}

TEST(Solution, WrongBoundaryParameterFailsODE) {
  // negative control: the ODE needs the prefactor on the right hand side
  const SolverParams sp = base_params(1);
  const SolutionVector s = solve_f({0.3, 0.0}, test_y(1), CycleW::monomial(1), sp);
  const Vec<Complex> d1 = apply_D1(s, sp);
  EXPECT_GT(max_abs(d1) / max_abs(s.f), 1e-3);
}

TEST(Solution, VanishingIntegral) {
  for (const Config& cfg : residual_configs()) {
    const SolverParams sp = base_params(cfg.n);
    double scale = 0.0;
    const Complex v = vanishing_integral(cfg.lambda, test_y(cfg.n), cfg.W, sp, &scale);
    EXPECT_LE(std::abs(v), 1e-9 * scale) << "n=" << cfg.n;
    EXPECT_GT(scale, 0.0);
  }
}

TEST(Solution, DerivativeMatchesRichardson) {
  for (int n = 1; n <= 2; ++n) {
    const SolverParams sp = base_params(n);
    const CVec y = test_y(n);
    const Complex lambda{0.3, 0.0};
    const CycleW W = CycleW::monomial(1);
    const SolutionVector s = solve_f(lambda, y, W, sp);
    auto central = [&](double h) {
      const CVec& p = solve_f(lambda + h, y, W, sp).coeffs;
      const CVec& m = solve_f(lambda - h, y, W, sp).coeffs;
      CVec d(p.size());
      for (std::size_t j = 0; j < p.size(); ++j) d[j] = (p[j] - m[j]) / (2.0 * h);
      return d;
    };
    const double h = 1e-4;
    const CVec d1 = central(h), d2 = central(h / 2.0);
    for (std::size_t j = 0; j < d1.size(); ++j) {
      const Complex rich = (4.0 * d2[j] - d1[j]) / 3.0;
      EXPECT_LE(rel(s.dcoeffs[j], rich), 1e-6) << "n=" << n << " j=" << j + 1;
    }
  }
}

TEST(Solution, TighterToleranceShrinksResiduals) {
  SolverParams loose = base_params(1);
  loose.quad.order = 4;
  loose.quad.panels_per_unit = 0.5;
  loose.quad.rtol = 1e-4;
  SolverParams tight = loose;
  tight.quad.rtol = 1e-5;
  const Complex lambda{0.3, 0.0};
  const ResidualReport a = residual_report(lambda, test_y(1), CycleW::monomial(1), loose);
  const ResidualReport b = residual_report(lambda, test_y(1), CycleW::monomial(1), tight);
  EXPECT_LT(b.solution.diag.error_estimate, a.solution.diag.error_estimate);
  EXPECT_LT(b.ode, a.ode);
  EXPECT_LT(b.qkz_max, a.qkz_max);
}

TEST(Solution, Deterministic) {
  const SolverParams sp = base_params(2);
  const SolutionVector a = solve_f({0.7, 0.0}, test_y(2), CycleW::monomial(2), sp);
  const SolutionVector b = solve_f({0.7, 0.0}, test_y(2), CycleW::monomial(2), sp);
  EXPECT_EQ(a.coeffs, b.coeffs);
  EXPECT_EQ(a.dcoeffs, b.dcoeffs);
  EXPECT_EQ(a.diag.T, b.diag.T);
  EXPECT_EQ(a.diag.panels, b.diag.panels);
}

}  // namespace
