#pragma once

// Randomized exact verification campaigns. Each suite draws seeded rational
// points, rejects pole configurations, and records whether every residual is
// the exact zero operator.

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "bqkz/compat.hpp"
#include "bqkz/hecke.hpp"
#include "bqkz/parallel.hpp"
#include "bqkz/random.hpp"
#include "bqkz/rqkz.hpp"
#include "bqkz/scalar.hpp"
#include "bqkz/tensor.hpp"

namespace bqkz {

struct SamplingExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Shape {
  int n;
  int N;
  std::string str() const { return "(n=" + std::to_string(n) + ",N=" + std::to_string(N) + ")"; }
};

/// Checks performed at one sample point.
struct SampleLog {
  std::size_t checks = 0;
  std::vector<std::string> failures;

  void expect_zero(const LinOp<Rational>& residual, const std::string& what) {
    ++checks;
    if (!residual.is_zero()) failures.push_back(what + ": " + std::to_string(residual.nnz()) + " nonzero entries");
  }
  void expect(bool ok, const std::string& what) {
    ++checks;
    if (!ok) failures.push_back(what);
  }
};

using SuiteBody = std::function<void(RationalSampler&, const Shape&, SampleLog&)>;

struct Suite {
  std::string name;
  std::string anchor;
  std::vector<Shape> shapes;
  SuiteBody body;
};

struct SuiteResult {
  std::string name;
  std::string anchor;
  std::vector<Shape> shapes;
  std::size_t samples = 0;  // per shape
  std::size_t checks = 0;
  std::size_t rejected = 0;
  bool all_zero = true;
  std::vector<std::string> failures;  // at most kMaxFailures, deterministic order
  double elapsed_s = 0.0;

  static constexpr std::size_t kMaxFailures = 20;
};

inline constexpr int kMaxAttempts = 500;

namespace sample {

inline Rational nz(RationalSampler& s) { return s.next_nonzero(); }

inline ModelParams<Rational> params(RationalSampler& s, Shape sh) {
  return {nz(s), nz(s), nz(s), nz(s), Space(sh.n, sh.N)};
}

inline std::vector<Rational> vec(RationalSampler& s, int len) {
  std::vector<Rational> v;
  for (int i = 0; i < len; ++i) v.push_back(s.next());
  return v;
}

inline std::vector<Rational> vec_nz(RationalSampler& s, int len) {
  std::vector<Rational> v;
  for (int i = 0; i < len; ++i) v.push_back(nz(s));
  return v;
}

}  // namespace sample

struct SampleOutcome {
  SampleLog log;
  std::size_t rejected = 0;
};

struct SamplingRange {
  long max_num = 50;
  long max_den = 20;
};

/// Runs `body` at a fresh point until no pole or singular factor is hit.
inline SampleOutcome run_sample(const Suite& suite, const Shape& sh, std::uint64_t seed, SamplingRange range = {}) {
  RationalSampler sampler(seed, range.max_num, range.max_den);
  SampleOutcome out;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    SampleLog log;
    try {
      suite.body(sampler, sh, log);
      out.log = std::move(log);
      return out;
    } catch (const PoleError&) {
    } catch (const SingularMatrix&) {
    } catch (const DivisionByZero&) {
    }
    ++out.rejected;
  }
  throw SamplingExhausted("suite " + suite.name + " " + sh.str() + ": no generic point after " +
                          std::to_string(kMaxAttempts) + " draws (|num| <= " + std::to_string(range.max_num) +
                          ", den <= " + std::to_string(range.max_den) + ")");
}

inline SuiteResult run_suite(const Suite& suite, std::uint64_t seed, std::size_t samples, unsigned threads = 0,
                             SamplingRange range = {}) {
  const auto start = std::chrono::steady_clock::now();
  SuiteResult res;
  res.name = suite.name;
  res.anchor = suite.anchor;
  res.shapes = suite.shapes;
  res.samples = samples;
  const std::size_t total = samples * suite.shapes.size();
  const auto outcomes = parallel_map<SampleOutcome>(
      total,
      [&](std::size_t idx) {
        const Shape& sh = suite.shapes[idx / samples];
        const std::size_t i = idx % samples;
        return run_sample(suite, sh, derive_seed(seed, suite.name + ":" + sh.str(), i), range);
      },
      threads);
  for (std::size_t idx = 0; idx < outcomes.size(); ++idx) {
    const SampleOutcome& o = outcomes[idx];
    res.checks += o.log.checks;
    res.rejected += o.rejected;
    for (const std::string& f : o.log.failures) {
      res.all_zero = false;
      if (res.failures.size() < SuiteResult::kMaxFailures) {
        const Shape& sh = suite.shapes[idx / samples];
        res.failures.push_back(sh.str() + " sample " + std::to_string(idx % samples) + ": " + f);
      }
    }
  }
  res.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

// ---------------------------------------------------------------------------
// Suite catalogue

namespace suites {

using R = Rational;

inline Suite ybe() {
  return {"ybe", "Yang-Baxter equation R12 R13 R23 = R23 R13 R12", {{3, 1}, {3, 2}, {3, 3}},
          [](RationalSampler& s, const Shape& sh, SampleLog& log) {
            const R l1 = s.next(), l2 = s.next(), l3 = s.next(), k = sample::nz(s);
            log.expect_zero(ybe_residual(l1, l2, l3, k, sh.N), "Yang-Baxter residual");
          }};
}

inline Suite bybe() {
  return {"bybe", "boundary Yang-Baxter (reflection) equation for K(lambda|x,beta)", {{2, 1}, {2, 2}, {2, 3}},
          [](RationalSampler& s, const Shape& sh, SampleLog& log) {
            const R l1 = s.next(), l2 = s.next(), k = sample::nz(s), beta = sample::nz(s);
            const XPoint<R> x = sample::vec_nz(s, sh.N);
            log.expect_zero(bybe_residual(l1, l2, x, beta, k), "reflection equation residual");
          }};
}

inline Suite unitarity() {
  return {"unitarity", "unitarity R(l)R(-l) = 1, K(l)K(-l) = 1 and the factorizations of lP - k, lT(x) - beta",
          {{1, 1}, {1, 2}, {1, 3}},
          [](RationalSampler& s, const Shape& sh, SampleLog& log) {
            const int N = sh.N;
            const R l = s.next(), k = sample::nz(s), beta = sample::nz(s);
            const XPoint<R> x = sample::vec_nz(s, N);
            const Space s2(2, N), s1(1, N);
            const LinOp<R> id2 = LinOp<R>::identity(s2), id1 = LinOp<R>::identity(s1);
            const LinOp<R> r = op_R(l, k, N);
            const LinOp<R> kk = op_K(l, x, beta);
            log.expect_zero(r * op_R(-l, k, N) - id2, "R(l)R(-l) - 1");
            log.expect_zero(kk * op_K(-l, x, beta) - id1, "K(l)K(-l) - 1");
            const LinOp<R> P = swap_op<R>(N);
            log.expect_zero(l * P - k * id2 - (l - k) * (P * invert(r)), "lP - k - (l-k) P R(l)^{-1}");
            log.expect_zero(l * op_T(x) - beta * id1 - (l - beta) * invert(kk), "lT - beta - (l-beta) K(l)^{-1}");
            log.expect_zero(invert(r) - op_R(-l, k, N), "R(l)^{-1} - R(-l)");
          }};
}

inline Suite qkz_consistency() {
  return {"qkz-consistency", "consistency of the boundary rational qKZ system Q_m(y - c e_l) Q_l(y) = Q_l(y - c e_m) Q_m(y)",
          {{2, 2}, {3, 2}, {2, 3}},
          [](RationalSampler& s, const Shape& sh, SampleLog& log) {
            const ModelParams<R> p = sample::params(s, sh);
            const XPoint<R> x = sample::vec_nz(s, sh.N);
            const YPoint<R> y = sample::vec(s, sh.n);
            for (int l = 1; l <= sh.n; ++l)
              for (int m = 1; m <= sh.n; ++m)
                if (l != m)
                  log.expect_zero(qkz_consistency_residual(l, m, x, y, p),
                                  "consistency (l,m)=(" + std::to_string(l) + "," + std::to_string(m) + ")");
          }};
}

inline Suite lemma_AA() {
  return {"lemma-AA", "commutativity [A_a(y), A_b(y)] = 0", {{2, 2}, {3, 2}, {2, 3}},
          [](RationalSampler& s, const Shape& sh, SampleLog& log) {
            const ModelParams<R> p = sample::params(s, sh);
            const YPoint<R> y = sample::vec(s, sh.n);
            std::vector<LinOp<R>> A;
            for (int a = 1; a <= sh.N; ++a) A.push_back(op_A(a, y, p));
            for (int a = 1; a <= sh.N; ++a)
              for (int b = a + 1; b <= sh.N; ++b)
                log.expect_zero(commutator(A[static_cast<std::size_t>(a - 1)], A[static_cast<std::size_t>(b - 1)]),
                                "[A_" + std::to_string(a) + ", A_" + std::to_string(b) + "]");
          }};
}

inline Suite lemma_LL() {
  return {"lemma-LL", "commutativity [L_a(x|y), L_b(x|y)] = 0 and the site/pair form of L_a", {{2, 2}, {3, 2}, {2, 3}},
          [](RationalSampler& s, const Shape& sh, SampleLog& log) {
            const ModelParams<R> p = sample::params(s, sh);
            const XPoint<R> x = sample::vec_nz(s, sh.N);
            const YPoint<R> y = sample::vec(s, sh.n);
            std::vector<LinOp<R>> L;
            for (int a = 1; a <= sh.N; ++a) {
              L.push_back(op_L(a, x, y, p));
              log.expect_zero(L.back() - op_L_from_IM(a, x, y, p), "L_" + std::to_string(a) + " - (sum I + sum M)");
            }
            for (int a = 1; a <= sh.N; ++a)
              for (int b = a + 1; b <= sh.N; ++b)
                log.expect_zero(commutator(L[static_cast<std::size_t>(a - 1)], L[static_cast<std::size_t>(b - 1)]),
                                "[L_" + std::to_string(a) + ", L_" + std::to_string(b) + "]");
          }};
}

inline Suite cross_derivative() {
  return {"cross-derivative", "x_a dL_b/dx_a = x_b dL_a/dx_b", {{2, 2}, {2, 3}, {3, 2}},
          [](RationalSampler& s, const Shape& sh, SampleLog& log) {
            const ModelParams<R> p = sample::params(s, sh);
            const XPoint<R> x = sample::vec_nz(s, sh.N);
            for (int a = 1; a <= sh.N; ++a)
              for (int b = 1; b <= sh.N; ++b)
                log.expect_zero(cross_derivative_residual(a, b, x, p),
                                "cross derivative (a,b)=(" + std::to_string(a) + "," + std::to_string(b) + ")");
          }};
}

inline Suite comm_IM() {
  return {"comm-IM", "R12(y1-y2) (I + I + M^(1,2)) R12(y1-y2)^{-1} = I + I + M^(2,1) with M^(2,1) = P M P",
          {{2, 1}, {2, 2}, {2, 3}},
          [](RationalSampler& s, const Shape& sh, SampleLog& log) {
            const ModelParams<R> p = sample::params(s, Shape{2, sh.N});
            const XPoint<R> x = sample::vec_nz(s, sh.N);
            const R y1 = s.next(), y2 = s.next();
            for (int a = 1; a <= sh.N; ++a)
              log.expect_zero(comm_IM_residual(a, x, y1, y2, p), "conjugation residual a=" + std::to_string(a));
          }};
}

inline Suite compatibility() {
  return {"compatibility", "[D_a(x|y), Delta_m^{-1} Q_m(x|y)] = 0 in three-term and direct form",
          {{1, 1}, {2, 2}, {3, 2}, {2, 3}},
          [](RationalSampler& s, const Shape& sh, SampleLog& log) {
            const ModelParams<R> p = sample::params(s, sh);
            const XPoint<R> x = sample::vec_nz(s, sh.N);
            const YPoint<R> y = sample::vec(s, sh.n);
            for (int a = 1; a <= sh.N; ++a)
              for (int m = 1; m <= sh.n; ++m) {
                const std::string tag = " (a,m)=(" + std::to_string(a) + "," + std::to_string(m) + ")";
                log.expect_zero(dK_term_from_derivative(m, a, x, y, p) - dK_term_closed_form(m, a, x, y, p),
                                "first term, derivative vs closed form" + tag);
                log.expect_zero(compatibility_residual(a, m, x, y, p), "three-term identity" + tag);
                log.expect_zero(compatibility_direct_residual(a, m, x, y, p), "direct form" + tag);
              }
          }};
}

inline Suite aha_relations() {
  return {"aha-relations", "degenerate affine Hecke relations of A_i(y) and rho_L(s_j) on the cyclic submodule",
          {{1, 1}, {2, 2}, {3, 3}},
          [](RationalSampler& s, const Shape& sh, SampleLog& log) {
            const ModelParams<R> p = sample::params(s, sh);
            const YPoint<R> y = sample::vec(s, sh.n);
            const OrbitBasis orbit(p.space);
            for (const auto& [what, res] : aha_residuals(y, p, orbit)) log.expect_zero(res, what);
          }};
}

inline Suite phi_iso() {
  return {"phi-iso", "phi: C[W_0] -> cyclic submodule is an isomorphism of (H, C[W]) bimodules",
          {{1, 1}, {2, 2}, {3, 3}},
          [](RationalSampler& s, const Shape& sh, SampleLog& log) {
            const int n = sh.n;
            const ModelParams<R> p = sample::params(s, sh);
            const XPoint<R> x = sample::vec_nz(s, n);
            const YPoint<R> y = sample::vec(s, n);
            const OrbitBasis orbit(p.space);
            std::size_t expected = std::size_t{1} << n;
            for (int i = 2; i <= n; ++i) expected *= static_cast<std::size_t>(i);
            log.expect(orbit.elements.size() == expected, "group order 2^n n!");
            log.expect(orbit.by_index.size() == expected, "phi injective on W_0");
            std::vector<LinOp<R>> A;
            for (int a = 1; a <= n; ++a) A.push_back(op_A(a, y, p));
            std::vector<LinOp<R>> rr;
            for (int g = 0; g <= n; ++g) rr.push_back(rhoR_generator<R>(g, x, p.space));
            for (const SignedPerm& w : orbit.elements) {
              const Vec<R> pw = phi<R>(w, p.space);
              for (int g = 1; g <= n; ++g)
                log.expect(rr[static_cast<std::size_t>(g)] * pw == phi<R>(w * gen_s(g, n), p.space),
                           "phi(w s_" + std::to_string(g) + ") = rho_R(s_" + std::to_string(g) + ") phi(w), w=" + w.str());
              const int j = w(1);
              const R xj = j > 0 ? x[static_cast<std::size_t>(j - 1)] : R(1) / x[static_cast<std::size_t>(-j - 1)];
              log.expect(rr[0] * pw == (R(1) / xj) * phi<R>(w * gen_r(1, n), p.space),
                         "phi(w s_0) = T_1(x) phi(w), w=" + w.str());
              for (int a = 1; a <= n; ++a)
                log.expect(A[static_cast<std::size_t>(a - 1)] * pw == phi_combination(eta_L_y(a, w, y, p), p.space),
                           "A_" + std::to_string(a) + " phi(w) = phi(y_" + std::to_string(a) + " w), w=" + w.str());
            }
          }};
}

inline Suite cbar_qinv() {
  return {"cbar-qinv", "phi Cbar(1,eps_m) phi^{-1} = Q_m(x|y)^{-1} on the cyclic submodule", {{1, 1}, {2, 2}, {3, 3}},
          [](RationalSampler& s, const Shape& sh, SampleLog& log) {
            const ModelParams<R> p = sample::params(s, sh);
            const XPoint<R> x = sample::vec_nz(s, sh.n);
            const YPoint<R> y = sample::vec(s, sh.n);
            const OrbitBasis orbit(p.space);
            for (int m = 1; m <= sh.n; ++m) {
              const LinOp<R> cbar = op_Cbar(m, x, y, p);
              const std::string tag = " m=" + std::to_string(m);
              log.expect_zero(restrict_to(cbar - op_Q_inverse(m, x, y, p), orbit), "Cbar - Q^{-1}" + tag);
              log.expect_zero(restrict_to(cbar - op_Cbar_grouped(m, x, y, p), orbit), "Cbar - grouped form / p_m" + tag);
            }
          }};
}

inline Suite l_restriction() {
  return {"l-restriction", "restriction identities for Ebar, X, Y, Z and phi L_a phi^{-1} = A_a(y) + B_a(x)",
          {{2, 2}, {3, 3}},
          [](RationalSampler& s, const Shape& sh, SampleLog& log) {
            const ModelParams<R> p = sample::params(s, sh);
            const XPoint<R> x = sample::vec_nz(s, sh.n);
            const YPoint<R> y = sample::vec(s, sh.n);
            const OrbitBasis orbit(p.space);
            for (int a = 1; a <= sh.n; ++a) {
              for (const auto& [what, res] : l_restriction_residuals(a, p, orbit)) log.expect_zero(res, what);
              log.expect_zero(restrict_to(op_L(a, x, y, p) - op_L_group_form(a, x, y, p), orbit),
                              "L_" + std::to_string(a) + " - group form");
            }
          }};
}

}  // namespace suites

inline std::vector<Suite> all_suites() {
  return {suites::ybe(),           suites::bybe(),        suites::qkz_consistency(), suites::unitarity(),
          suites::lemma_AA(),      suites::lemma_LL(),    suites::cross_derivative(), suites::comm_IM(),
          suites::compatibility(), suites::aha_relations(), suites::phi_iso(),       suites::cbar_qinv(),
          suites::l_restriction()};
}

inline const Suite& find_suite(const std::vector<Suite>& all, const std::string& name) {
  for (const Suite& s : all)
    if (s.name == name) return s;
  throw std::invalid_argument("unknown suite '" + name + "'");
}

}  // namespace bqkz
