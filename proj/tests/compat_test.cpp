#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "bqkz/compat.hpp"
#include "bqkz/hecke.hpp"
#include "test_support.hpp"

namespace {

using namespace bqkz;
using namespace bqkz::testing;

// Draws a generic point; returns false when the draw hits a pole.
template <class F>
int for_generic_points(const std::string& tag, int wanted, F&& body) {
  int done = 0;
  for (std::uint64_t i = 0; done < wanted && i < 20u * static_cast<std::uint64_t>(wanted); ++i) {
    auto s = sampler_for(tag, i);
    try {
      body(s);
      ++done;
    } catch (const PoleError&) {
    } catch (const SingularMatrix&) {
    }
  }
  return done;
}

TEST(PairOps, Symmetries) {
  for (int N = 1; N <= 3; ++N)
    for (int a = 1; a <= N; ++a)
      for (int b = 1; b <= N; ++b) {
        EXPECT_EQ(pair_J<R>(a, b, N), pair_J<R>(b, a, N));
        EXPECT_EQ(pair_K<R>(a, b, N), pair_K<R>(b, a, N));
        const Space sp(3, N);
        EXPECT_EQ(op_Y<R>(a, b, sp), op_Y<R>(b, a, sp));
        EXPECT_EQ(op_Z<R>(a, b, sp), op_Z<R>(b, a, sp));
      }
}

TEST(OpA, EigenvectorOfBaseTensor) {
  for (int n = 1; n <= 3; ++n) {
    for_generic_points("A-eigen-" + std::to_string(n), 10, [&](RationalSampler& s) {
      const ModelParams<R> p = random_params(s, n, n);
      const YPoint<R> y = random_y(s, n);
      const Vec<R> base = phi<R>(SignedPerm(n), p.space);
      for (int a = 1; a <= n; ++a) EXPECT_EQ(op_A(a, y, p) * base, y[static_cast<std::size_t>(a - 1)] * base);
    });
  }
}

TEST(OpA, DiagonalWithoutCoupling) {
  const ModelParams<R> p{R(1), R(0), R(0), R(1), Space(2, 2)};
  const YPoint<R> y{R(3, 2), R(-7, 5)};
  const LinOp<R> A = op_A(1, y, p);
  for (std::size_t i = 0; i < A.dim(); ++i) {
    R expected(0);
    const auto labels = multi_index(p.space, i);
    for (std::size_t j = 0; j < labels.size(); ++j)
      if (labels[j].a == 1) expected += labels[j].bar ? -y[j] : y[j];
    EXPECT_EQ(A.at(i, i), expected);
    for (const auto& [col, v] : A.row(i)) EXPECT_EQ(col, i);
  }
}

TEST(OpA, Commute) {
  for (auto [n, N] : {std::pair{2, 2}, {3, 2}, {2, 3}}) {
    for_generic_points("AA-" + std::to_string(n) + std::to_string(N), 10, [&](RationalSampler& s) {
      const ModelParams<R> p = random_params(s, n, N);
      const YPoint<R> y = random_y(s, n);
      for (int a = 1; a <= N; ++a)
        for (int b = a + 1; b <= N; ++b) EXPECT_OP_ZERO(commutator(op_A(a, y, p), op_A(b, y, p)));
    });
  }
}

TEST(OpB, SingleSite) {
  for_generic_points("B-n1", 20, [](RationalSampler& s) {
    const ModelParams<R> p = random_params(s, 1, 3);
    const XPoint<R> x = random_x(s, 3);
    for (int a = 1; a <= 3; ++a) {
      const R xa = x[static_cast<std::size_t>(a - 1)];
      const R coeff = checked_div(R(2) * (p.alpha + p.beta * xa), xa * xa - R(1), "x_a = +-1");
      EXPECT_EQ(op_B(a, x, p), coeff * op_Ebar<R>(a, a, 3));
    }
  });
}

TEST(OpB, SingularConfigurationsThrow) {
  const ModelParams<R> p{R(1), R(2), R(3), R(5), Space(2, 2)};
  EXPECT_THROW(op_B(1, XPoint<R>{R(1), R(3)}, p), PoleError);
  EXPECT_THROW(op_B(1, XPoint<R>{R(3), R(3)}, p), PoleError);
  EXPECT_THROW(op_B(1, XPoint<R>{R(3), R(1, 3)}, p), PoleError);
}

TEST(OpL, Commute) {
  for (auto [n, N] : {std::pair{2, 2}, {3, 2}, {2, 3}}) {
    for_generic_points("LL-" + std::to_string(n) + std::to_string(N), 10, [&](RationalSampler& s) {
      const ModelParams<R> p = random_params(s, n, N);
      const XPoint<R> x = random_x(s, N);
      const YPoint<R> y = random_y(s, n);
      for (int a = 1; a <= N; ++a)
        for (int b = a + 1; b <= N; ++b) EXPECT_OP_ZERO(commutator(op_L(a, x, y, p), op_L(b, x, y, p)));
    });
  }
}

TEST(OpL, BAloneDoesNotCommuteWithA) {
  // negative control: the commutativity needs both halves
  const ModelParams<R> p{R(1, 3), R(2), R(5), R(7), Space(2, 2)};
  const XPoint<R> x{R(2), R(-3)};
  const YPoint<R> y{R(1, 2), R(3, 4)};
  EXPECT_FALSE(commutator(op_A(1, y, p), op_B(2, x, p)).is_zero());
}

TEST(OpL, SitePairFormMatches) {
  for (auto [n, N] : {std::pair{1, 2}, {2, 2}, {3, 2}, {2, 3}}) {
    for_generic_points("L-IM-" + std::to_string(n) + std::to_string(N), 25, [&](RationalSampler& s) {
      const ModelParams<R> p = random_params(s, n, N);
      const XPoint<R> x = random_x(s, N);
      const YPoint<R> y = random_y(s, n);
      for (int a = 1; a <= N; ++a) EXPECT_EQ(op_L_from_IM(a, x, y, p), op_L(a, x, y, p));
    });
  }
}

TEST(OpI, VanishesWithoutParameters) {
  const ModelParams<R> p{R(1), R(1), R(0), R(0), Space(1, 2)};
  EXPECT_OP_ZERO(op_I(1, R(3), R(0), p));
  EXPECT_THROW(op_I(1, R(1), R(2), p), PoleError);
}

TEST(OpI, ConjugationByUnitK) {
  const int got = for_generic_points("I-K1", 50, [](RationalSampler& s) {
    const ModelParams<R> p = random_params(s, 1, 2);
    const R lambda = s.next_nonzero(), gamma = s.next();
    const LinOp<R> K = op_K(gamma, unit_x<R>(2), p.alpha);
    for (int a = 1; a <= 2; ++a) EXPECT_EQ(adjoint(K, op_I(a, lambda, gamma, p), invert(K)), op_I(a, lambda, -gamma, p));
  });
  EXPECT_EQ(got, 50);
}

TEST(OpI, ConjugationByXKGivesCorrection) {
  const int got = for_generic_points("I-Kx", 50, [](RationalSampler& s) {
    const ModelParams<R> p = random_params(s, 1, 2);
    const XPoint<R> x = random_x(s, 2);
    const R gamma = s.next();
    const LinOp<R> K = op_K(gamma - p.c / R(2), x, p.beta);
    for (int a = 1; a <= 2; ++a) {
      const R xa = x[static_cast<std::size_t>(a - 1)];
      EXPECT_EQ(adjoint(K, op_I(a, xa, -gamma, p), invert(K)) - op_I(a, xa, gamma, p), cbeta_correction(a, gamma, x, p));
    }
  });
  EXPECT_EQ(got, 50);
}

TEST(OpM, InvariantUnderBoundaryConjugation) {
  const int got = for_generic_points("M-K", 50, [](RationalSampler& s) {
    const int N = 2;
    const Space s2(2, N);
    const ModelParams<R> p = random_params(s, 2, N);
    const XPoint<R> x = random_x(s, N);
    const R gamma = s.next();
    const LinOp<R> K2 = embed_site(op_K(gamma, unit_x<R>(N), p.alpha), 2, s2);
    const LinOp<R> K1 = embed_site(op_K(gamma, x, p.beta), 1, s2);
    for (int a = 1; a <= N; ++a) {
      const LinOp<R> M = op_M(a, x, p);
      EXPECT_EQ(adjoint(K2, M, invert(K2)), M);
      EXPECT_EQ(adjoint(K1, M, invert(K1)), M);
    }
  });
  EXPECT_EQ(got, 50);
}

TEST(CommIM, ExactZero) {
  for (int N = 1; N <= 3; ++N) {
    for_generic_points("comm-IM-" + std::to_string(N), 20, [&](RationalSampler& s) {
      const ModelParams<R> p = random_params(s, 2, N);
      const XPoint<R> x = random_x(s, N);
      const R y1 = s.next(), y2 = s.next();
      for (int a = 1; a <= N; ++a) EXPECT_OP_ZERO(comm_IM_residual(a, x, y1, y2, p));
    });
  }
}

TEST(CommIM, EqualArgumentsAndZeroCoupling) {
  const ModelParams<R> p{R(1, 3), R(2), R(5), R(7), Space(2, 2)};
  const XPoint<R> x{R(2), R(-3)};
  // y1 = y2: R(0) = P
  EXPECT_OP_ZERO(comm_IM_residual(1, x, R(4, 9), R(4, 9), p));
  const LinOp<R> M = op_M(2, x, p);
  const LinOp<R> P = swap_op<R>(2);
  EXPECT_EQ(P * M * P, swap_slots(M));
  const ModelParams<R> p0{R(1, 3), R(0), R(5), R(7), Space(2, 2)};
  EXPECT_OP_ZERO(comm_IM_residual(1, x, R(1, 2), R(-3, 4), p0));
  EXPECT_OP_ZERO(op_M(1, x, p0));
}

TEST(CommIM, SymmetricPartCommutesWithR) {
  for_generic_points("sym-part", 30, [](RationalSampler& s) {
    const int N = 2;
    const ModelParams<R> p = random_params(s, 2, N);
    const XPoint<R> x = random_x(s, N);
    const R y1 = s.next(), y2 = s.next(), lambda = s.next();
    const LinOp<R> P = swap_op<R>(N);
    for (int a = 1; a <= N; ++a) {
      const LinOp<R> S = symmetric_part(a, x, y1, y2, p);
      EXPECT_EQ(P * S * P, S);
      EXPECT_OP_ZERO(commutator(op_R(lambda, p.k, N), S));
      EXPECT_OP_ZERO(commutator(op_R(y1 - y2, p.k, N), S));
    }
  });
}

TEST(CommIM, IntertwiningRelations) {
  for (int N = 1; N <= 3; ++N) {
    for_generic_points("intertwine-" + std::to_string(N), 20, [&](RationalSampler& s) {
      const R lambda = s.next(), k = s.next_nonzero();
      for (int c1 = 0; c1 < 2 * N; ++c1)
        for (int c2 = 0; c2 < 2 * N; ++c2) {
          const auto [r1, r2] = intertwining_residuals(code_label(c1, N), code_label(c2, N), lambda, k, N);
          EXPECT_OP_ZERO(r1);
          EXPECT_OP_ZERO(r2);
        }
    });
  }
}

TEST(CrossDerivative, ExactZero) {
  for (int N = 2; N <= 3; ++N) {
    for_generic_points("cross-" + std::to_string(N), 30, [&](RationalSampler& s) {
      const ModelParams<R> p = random_params(s, 2, N);
      const XPoint<R> x = random_x(s, N);
      for (int a = 1; a <= N; ++a)
        for (int b = 1; b <= N; ++b) EXPECT_OP_ZERO(cross_derivative_residual(a, b, x, p));
    });
  }
  const ModelParams<R> p0{R(1), R(0), R(0), R(0), Space(2, 2)};
  const XPoint<R> x{R(2), R(5)};
  EXPECT_OP_ZERO(op_B_euler_derivative(1, 2, x, p0));
  EXPECT_OP_ZERO(op_B_euler_derivative(2, 1, x, p0));
}

TEST(CrossDerivative, ClosedFormsMatchDualNumbers) {
  for (auto [n, N] : {std::pair{1, 2}, {2, 2}, {2, 3}}) {
    for_generic_points("B-dual-" + std::to_string(n) + std::to_string(N), 30, [&](RationalSampler& s) {
      const ModelParams<R> p = random_params(s, n, N);
      const XPoint<R> x = random_x(s, N);
      for (int a = 1; a <= N; ++a)
        for (int b = 1; b <= N; ++b) {
          const LinOp<Dual> bd = op_B(a, euler_seed(x, b), lift(p));
          EXPECT_EQ(value_part(bd), op_B(a, x, p));
          EXPECT_EQ(eps_part(bd), op_B_euler_derivative(a, b, x, p)) << "a=" << a << " b=" << b;
        }
    });
  }
}

TEST(Compatibility, FirstTermTwoWays) {
  for (auto [n, N] : {std::pair{1, 1}, {2, 2}, {3, 2}}) {
    for_generic_points("dK-" + std::to_string(n) + std::to_string(N), 30, [&](RationalSampler& s) {
      const ModelParams<R> p = random_params(s, n, N);
      const XPoint<R> x = random_x(s, N);
      const YPoint<R> y = random_y(s, n);
      for (int m = 1; m <= n; ++m)
        for (int a = 1; a <= N; ++a) {
          const LinOp<R> t = dK_term_from_derivative(m, a, x, y, p);
          EXPECT_EQ(t, dK_term_closed_form(m, a, x, y, p));
          // supported on site m
          const LinOp<R> local = dK_term_closed_form(1, a, x, YPoint<R>{y[static_cast<std::size_t>(m - 1)]},
                                                     ModelParams<R>{p.c, p.k, p.alpha, p.beta, Space(1, N)});
          EXPECT_EQ(t, embed_site(local, m, p.space));
        }
    });
  }
}

TEST(Compatibility, FirstTermDecaysLikeInverseBeta) {
  const int N = 2;
  const XPoint<R> x{R(3), R(-5, 2)};
  const YPoint<R> y{R(7, 3)};
  const R big(1000000);
  const ModelParams<R> p1{R(1, 2), R(1), R(2), big, Space(1, N)};
  const ModelParams<R> p2{R(1, 2), R(1), R(2), R(2) * big, Space(1, N)};
  const double m1 = max_abs(dK_term_closed_form(1, 1, x, y, p1));
  const double m2 = max_abs(dK_term_closed_form(1, 1, x, y, p2));
  EXPECT_NEAR(m2 / m1, 0.5, 1e-5);
}

TEST(Compatibility, ThreeTermAndDirectForms) {
  for (auto [n, N] : {std::pair{1, 1}, {2, 2}, {3, 2}, {2, 3}}) {
    for_generic_points("compat-" + std::to_string(n) + std::to_string(N), 5, [&](RationalSampler& s) {
      const ModelParams<R> p = random_params(s, n, N);
      const XPoint<R> x = random_x(s, N);
      const YPoint<R> y = random_y(s, n);
      for (int a = 1; a <= N; ++a)
        for (int m = 1; m <= n; ++m) {
          EXPECT_OP_ZERO(compatibility_residual(a, m, x, y, p));
          EXPECT_OP_ZERO(compatibility_direct_residual(a, m, x, y, p));
        }
    });
  }
}

TEST(Compatibility, PiecesMatchClosedForms) {
  for (auto [n, N] : {std::pair{1, 2}, {2, 2}, {3, 2}}) {
    for_generic_points("compat-pieces-" + std::to_string(n) + std::to_string(N), 7, [&](RationalSampler& s) {
      const ModelParams<R> p = random_params(s, n, N);
      const XPoint<R> x = random_x(s, N);
      const YPoint<R> y = random_y(s, n);
      for (int a = 1; a <= N; ++a)
        for (int m = 1; m <= n; ++m) {
          const CompatibilityTerms<R> t = compatibility_terms(a, m, x, y, p);
          EXPECT_EQ(t.dK, dK_term_closed_form(m, a, x, y, p));
          EXPECT_EQ(t.second, expected_second_term(a, m, x, y, p));
          EXPECT_EQ(t.third, expected_third_term(a, m, x, y, p));
        }
    });
  }
}

TEST(Compatibility, WrongConjugationDirectionFails) {
  // negative control: conjugating the shifted L by Q' instead of Q'^{-1}
  const ModelParams<R> p{R(1, 3), R(2), R(5), R(7), Space(2, 2)};
  const XPoint<R> x{R(2), R(-3)};
  const YPoint<R> y{R(1, 2), R(3, 4)};
  const int a = 1, m = 2;
  const QFactors<R> q = q_factors(m, y, p);
  const LinOp<R> lead = product_of<R>(q.lead, x, p);
  const LinOp<R> lead_inv = inverse_product_of<R>(q.lead, x, p);
  const CompatibilityTerms<R> t = compatibility_terms(a, m, x, y, p);
  const LinOp<R> l_shift = op_L(a, x, shifted(y, m, -p.c), p);
  EXPECT_OP_ZERO(t.dK + t.second + t.third);
  EXPECT_FALSE((t.dK + adjoint(lead, l_shift, lead_inv) + t.third).is_zero());
}

TEST(Compatibility, DirectFormFailsWithoutDerivative) {
  const ModelParams<R> p{R(1, 3), R(2), R(5), R(7), Space(2, 2)};
  const XPoint<R> x{R(2), R(-3)};
  const YPoint<R> y{R(1, 2), R(3, 4)};
  const LinOp<R> q = op_Q(1, x, y, p);
  EXPECT_FALSE((op_L(1, x, shifted(y, 1, -p.c), p) * q - q * op_L(1, x, y, p)).is_zero());
}

}  // namespace
