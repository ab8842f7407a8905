#pragma once

// Commuting operators L_a(x|y) = A_a(y) + B_a(x), their alternative
// site/pair form through I_a and M_a, and the residuals that certify
// commutativity and compatibility with the transport operators Q_m.

#include <vector>

#include "bqkz/rqkz.hpp"
#include "bqkz/scalar.hpp"
#include "bqkz/tensor.hpp"

namespace bqkz {

// ---------------------------------------------------------------------------
// Site and pair building blocks

template <class S>
LinOp<S> unit(Label a, Label b, int N) {
  return matrix_unit<S>(a, b, N);
}

/// E_{ab} = e_{ab} + e_{abar bbar}.
template <class S>
LinOp<S> op_E(int a, int b, int N) {
  return unit<S>(lab(a), lab(b), N) + unit<S>(labbar(a), labbar(b), N);
}

/// Ebar_{ab} = e_{a bbar} + e_{abar b}.
template <class S>
LinOp<S> op_Ebar(int a, int b, int N) {
  return unit<S>(lab(a), labbar(b), N) + unit<S>(labbar(a), lab(b), N);
}

/// U_{ab} = e_{ab} (x) E_{ba} + e_{bbar abar} (x) E_{ab}.
template <class S>
LinOp<S> pair_U(int a, int b, int N) {
  return kron(unit<S>(lab(a), lab(b), N), op_E<S>(b, a, N)) + kron(unit<S>(labbar(b), labbar(a), N), op_E<S>(a, b, N));
}

/// J_{ab} = e_{a bbar} (x) Ebar_{ba} + e_{b abar} (x) Ebar_{ab}.
template <class S>
LinOp<S> pair_J(int a, int b, int N) {
  return kron(unit<S>(lab(a), labbar(b), N), op_Ebar<S>(b, a, N)) +
         kron(unit<S>(lab(b), labbar(a), N), op_Ebar<S>(a, b, N));
}

/// K_{ab} = e_{abar b} (x) Ebar_{ba} + e_{bbar a} (x) Ebar_{ab}.
template <class S>
LinOp<S> pair_K(int a, int b, int N) {
  return kron(unit<S>(labbar(a), lab(b), N), op_Ebar<S>(b, a, N)) +
         kron(unit<S>(labbar(b), lab(a), N), op_Ebar<S>(a, b, N));
}

/// Sum over sites i < j of op2^{(i,j)}.
template <class S>
LinOp<S> sum_over_pairs(const LinOp<S>& op2, Space sp) {
  LinOp<S> out(sp);
  for (int i = 1; i <= sp.n; ++i)
    for (int j = i + 1; j <= sp.n; ++j) out = out + embed_pair(op2, i, j, sp);
  return out;
}

/// Sum over sites j of u^{(j)}.
template <class S>
LinOp<S> sum_over_sites(const LinOp<S>& u, Space sp) {
  LinOp<S> out(sp);
  for (int j = 1; j <= sp.n; ++j) out = out + embed_site(u, j, sp);
  return out;
}

template <class S>
LinOp<S> op_X(int a, int b, Space sp) {
  return sum_over_pairs(pair_U<S>(a, b, sp.N), sp);
}
template <class S>
LinOp<S> op_Y(int a, int b, Space sp) {
  return sum_over_pairs(pair_J<S>(a, b, sp.N), sp);
}
template <class S>
LinOp<S> op_Z(int a, int b, Space sp) {
  return sum_over_pairs(pair_K<S>(a, b, sp.N), sp);
}

// ---------------------------------------------------------------------------
// Coefficient functions of B_a(x) and their Euler derivatives.
// x_a d/dx_a of each is hand-derived; tests cross-check against dual numbers.

template <class S>
struct XCoefficients {
  const XPoint<S>& x;
  const ModelParams<S>& p;

  const S& at(int a) const { return x.at(static_cast<std::size_t>(a - 1)); }

  /// 2 (alpha + beta x_a) / (x_a^2 - 1)
  S boundary(int a) const {
    const S xa = at(a);
    return checked_div(S(2) * (p.alpha + p.beta * xa), xa * xa - S(1), "x_a = +-1");
  }
  /// Coefficient of (X_ap + X_pa): x_a/(x_a - x_p) for p < a, x_p/(x_a - x_p) for p > a.
  S exchange(int a, int q) const {
    const S den = at(a) - at(q);
    return checked_div(q < a ? at(a) : at(q), den, "x_a = x_p");
  }
  /// Coefficient of (Y_ap + Z_ap): 1/(x_a x_p - 1).
  S reflect(int a, int q) const { return checked_inverse(at(a) * at(q) - S(1), "x_a x_p = 1"); }

  /// x_b d/dx_b of boundary(a); nonzero only for b == a.
  S boundary_euler(int a, int b) const {
    if (a != b) return S(0);
    const S xa = at(a);
    const S den = xa * xa - S(1);
    const S num = S(2) * xa * (-(p.beta * xa * xa) - S(2) * p.alpha * xa - p.beta);
    return checked_div(num, den * den, "x_a = +-1");
  }
  /// x_b d/dx_b of exchange(a, q).
  S exchange_euler(int a, int q, int b) const {
    const S den = at(a) - at(q);
    const S den2 = den * den;
    // Both branches share d/dx_a = -x_q/den^2 and d/dx_q = x_a/den^2.
    if (b == a) return checked_div(-(at(a) * at(q)), den2, "x_a = x_p");
    if (b == q) return checked_div(at(q) * at(a), den2, "x_a = x_p");
    return S(0);
  }
  /// x_b d/dx_b of reflect(a, q).
  S reflect_euler(int a, int q, int b) const {
    const S den = at(a) * at(q) - S(1);
    const S den2 = den * den;
    if (a == q) return b == a ? checked_div(-(S(2) * at(a) * at(a)), den2, "x_a^2 = 1") : S(0);
    if (b == a || b == q) return checked_div(-(at(a) * at(q)), den2, "x_a x_p = 1");
    return S(0);
  }
};

// ---------------------------------------------------------------------------
// A_a(y), B_a(x), L_a(x|y)

template <class S>
LinOp<S> op_A(int a, const YPoint<S>& y, const ModelParams<S>& p) {
  const Space sp = p.space;
  const int N = sp.N;
  if (static_cast<int>(y.size()) != sp.n) throw std::invalid_argument("YPoint: expected n coordinates");
  const LinOp<S> diag = unit<S>(lab(a), lab(a), N) - unit<S>(labbar(a), labbar(a), N);
  LinOp<S> out(sp);
  for (int j = 1; j <= sp.n; ++j) out = out + y[static_cast<std::size_t>(j - 1)] * embed_site(diag, j, sp);
  out = out + (S(2) * p.alpha) * sum_over_sites(unit<S>(lab(a), labbar(a), N), sp);

  LinOp<S> coupling(sp);
  for (int q = 1; q < a; ++q) coupling = coupling - op_X<S>(q, a, sp);
  for (int q = a + 1; q <= N; ++q) coupling = coupling + op_X<S>(a, q, sp);
  for (int q = 1; q <= N; ++q) coupling = coupling + op_Y<S>(a, q, sp);
  return out + p.k * coupling;
}

template <class S>
LinOp<S> op_B(int a, const XPoint<S>& x, const ModelParams<S>& p) {
  const Space sp = p.space;
  validate_x(x, sp.N);
  const XCoefficients<S> cf{x, p};
  LinOp<S> out = cf.boundary(a) * sum_over_sites(op_Ebar<S>(a, a, sp.N), sp);
  LinOp<S> coupling(sp);
  for (int q = 1; q <= sp.N; ++q) {
    if (q != a) coupling = coupling + cf.exchange(a, q) * (op_X<S>(a, q, sp) + op_X<S>(q, a, sp));
    coupling = coupling + cf.reflect(a, q) * (op_Y<S>(a, q, sp) + op_Z<S>(a, q, sp));
  }
  return out + p.k * coupling;
}

/// x_b dB_a/dx_b from the closed-form coefficient derivatives.
template <class S>
LinOp<S> op_B_euler_derivative(int a, int b, const XPoint<S>& x, const ModelParams<S>& p) {
  const Space sp = p.space;
  const XCoefficients<S> cf{x, p};
  LinOp<S> out = cf.boundary_euler(a, b) * sum_over_sites(op_Ebar<S>(a, a, sp.N), sp);
  LinOp<S> coupling(sp);
  for (int q = 1; q <= sp.N; ++q) {
    if (q != a) {
      const S ce = cf.exchange_euler(a, q, b);
      if (!field_traits<S>::is_zero(ce)) coupling = coupling + ce * (op_X<S>(a, q, sp) + op_X<S>(q, a, sp));
    }
    const S cr = cf.reflect_euler(a, q, b);
    if (!field_traits<S>::is_zero(cr)) coupling = coupling + cr * (op_Y<S>(a, q, sp) + op_Z<S>(a, q, sp));
  }
  return out + p.k * coupling;
}

template <class S>
LinOp<S> op_L(int a, const XPoint<S>& x, const YPoint<S>& y, const ModelParams<S>& p) {
  return op_A(a, y, p) + op_B(a, x, p);
}

// ---------------------------------------------------------------------------
// Site/pair form: L_a = sum_j I_a(x_a|y_j)^{(j)} + sum_{i<j} M_a(x)^{(i,j)}

/// I_a(lambda|gamma) = gamma (e_aa - e_abar abar) + 2(alpha + beta lambda)/(lambda^2 - 1) e_{abar a}
///                   + 2(alpha + beta/lambda)/(1 - lambda^{-2}) e_{a abar}.
template <class S>
LinOp<S> op_I(int a, const S& lambda, const S& gamma, const ModelParams<S>& p) {
  const int N = p.space.N;
  const S inv_l = checked_inverse(lambda, "I_a at lambda = 0");
  const S lower = checked_div(S(2) * (p.alpha + p.beta * lambda), lambda * lambda - S(1), "I_a at lambda = +-1");
  const S upper = checked_div(S(2) * (p.alpha + p.beta * inv_l), S(1) - inv_l * inv_l, "I_a at lambda = +-1");
  return gamma * (unit<S>(lab(a), lab(a), N) - unit<S>(labbar(a), labbar(a), N)) +
         lower * unit<S>(labbar(a), lab(a), N) + upper * unit<S>(lab(a), labbar(a), N);
}

template <class S>
LinOp<S> op_M(int a, const XPoint<S>& x, const ModelParams<S>& p) {
  const int N = p.space.N;
  validate_x(x, N);
  auto X = [&](int q) -> const S& { return x.at(static_cast<std::size_t>(q - 1)); };
  const S xa = X(a);
  const S inv_xa = S(1) / xa;
  const S lead = checked_div(S(2) * p.k, xa - inv_xa, "M_a at x_a = +-1");
  LinOp<S> out = lead * kron(xa * unit<S>(lab(a), labbar(a), N) + inv_xa * unit<S>(labbar(a), lab(a), N),
                             unit<S>(lab(a), labbar(a), N) + unit<S>(labbar(a), lab(a), N));
  LinOp<S> rest(Space(2, N));
  for (int q = 1; q <= N; ++q) {
    if (q == a) continue;
    const S xq = X(q);
    const S dinv = checked_inverse(xa - xq, "M_a at x_a = x_p");
    const S rinv = checked_inverse(xa * xq - S(1), "M_a at x_a x_p = 1");
    rest = rest + (xa * dinv) * pair_U<S>(a, q, N) + (xq * dinv) * pair_U<S>(q, a, N) +
           (xa * xq * rinv) * pair_J<S>(a, q, N) + rinv * pair_K<S>(a, q, N);
  }
  return out + p.k * rest;
}

template <class S>
LinOp<S> op_L_from_IM(int a, const XPoint<S>& x, const YPoint<S>& y, const ModelParams<S>& p) {
  const Space sp = p.space;
  const S& xa = x.at(static_cast<std::size_t>(a - 1));
  LinOp<S> out(sp);
  for (int j = 1; j <= sp.n; ++j) out = out + embed_site(op_I(a, xa, y[static_cast<std::size_t>(j - 1)], p), j, sp);
  return out + sum_over_pairs(op_M(a, x, p), sp);
}

/// R12(y1-y2) (I^(1) + I^(2) + M^(1,2)) R12(y1-y2)^{-1} - (I^(1) + I^(2) + M^(2,1)) on V^{(x)2}.
template <class S>
LinOp<S> comm_IM_residual(int a, const XPoint<S>& x, const S& y1, const S& y2, const ModelParams<S>& p) {
  const int N = p.space.N;
  const Space sp(2, N);
  const S& xa = x.at(static_cast<std::size_t>(a - 1));
  const LinOp<S> sites =
      embed_site(op_I(a, xa, y1, p), 1, sp) + embed_site(op_I(a, xa, y2, p), 2, sp);
  const LinOp<S> m = op_M(a, x, p);
  const LinOp<S> r = op_R(y1 - y2, p.k, N);
  const LinOp<S> r_inv = invert(r);
  return adjoint(r, sites + m, r_inv) - (sites + swap_slots(m));
}

// ---------------------------------------------------------------------------
// Compatibility with the transport operators

/// c x_a (dK/dx_a) K^{-1} for K = K_m(y_m - c/2 | x, beta), via the analytic
/// derivative of T(x).
template <class S>
LinOp<S> dK_term_from_derivative(int m, int a, const XPoint<S>& x, const YPoint<S>& y, const ModelParams<S>& p) {
  const S lam = y.at(static_cast<std::size_t>(m - 1)) - p.c / S(2);
  const LinOp<S> dK = op_K_euler_derivative(lam, x, p.beta, a);
  const LinOp<S> k_inv = invert(op_K(lam, x, p.beta));
  return embed_site(p.c * (dK * k_inv), m, p.space);
}

/// Same operator, closed form:
/// c l/(l^2 - beta^2) { l (e_aa - e_abar abar) - beta (x_a e_{a abar} - x_a^{-1} e_{abar a}) }^{(m)},
/// l = y_m - c/2.
template <class S>
LinOp<S> dK_term_closed_form(int m, int a, const XPoint<S>& x, const YPoint<S>& y, const ModelParams<S>& p) {
  const int N = p.space.N;
  const S lam = y.at(static_cast<std::size_t>(m - 1)) - p.c / S(2);
  const S& xa = x.at(static_cast<std::size_t>(a - 1));
  const S pref = checked_div(p.c * lam, lam * lam - p.beta * p.beta, "(y_m - c/2)^2 = beta^2");
  const LinOp<S> body =
      lam * (unit<S>(lab(a), lab(a), N) - unit<S>(labbar(a), labbar(a), N)) -
      p.beta * (xa * unit<S>(lab(a), labbar(a), N) - (S(1) / xa) * unit<S>(labbar(a), lab(a), N));
  return embed_site(pref * body, m, p.space);
}

template <class S>
struct CompatibilityTerms {
  LinOp<S> dK;      // c x_a (dK/dx_a) K^{-1}
  LinOp<S> second;  // Q'^{-1} L_a(x|..., y_m - c, ...) Q'
  LinOp<S> third;   // -(K Q'') L_a(x|y) (K Q'')^{-1}
};

/// The three pieces whose sum vanishes iff [D_a, Delta_m^{-1} Q_m] = 0.
template <class S>
CompatibilityTerms<S> compatibility_terms(int a, int m, const XPoint<S>& x, const YPoint<S>& y,
                                          const ModelParams<S>& p) {
  const QFactors<S> q = q_factors(m, y, p);
  const LinOp<S> lead = product_of<S>(q.lead, x, p);
  const LinOp<S> lead_inv = inverse_product_of<S>(q.lead, x, p);

  std::vector<Factor<S>> mid_tail{q.middle};
  mid_tail.insert(mid_tail.end(), q.tail.begin(), q.tail.end());
  const LinOp<S> kq = product_of<S>(mid_tail, x, p);
  const LinOp<S> kq_inv = inverse_product_of<S>(mid_tail, x, p);

  const LinOp<S> l_shift = op_L(a, x, shifted(y, m, -p.c), p);
  const LinOp<S> l = op_L(a, x, y, p);
  return {dK_term_from_derivative(m, a, x, y, p), adjoint(lead_inv, l_shift, lead), -adjoint(kq, l, kq_inv)};
}

template <class S>
LinOp<S> compatibility_residual(int a, int m, const XPoint<S>& x, const YPoint<S>& y, const ModelParams<S>& p) {
  const CompatibilityTerms<S> t = compatibility_terms(a, m, x, y, p);
  return t.dK + t.second + t.third;
}

/// L_a(x|..., y_m - c, ...) Q_m - Q_m L_a(x|y) + c x_a dQ_m/dx_a.
template <class S>
LinOp<S> compatibility_direct_residual(int a, int m, const XPoint<S>& x, const YPoint<S>& y,
                                       const ModelParams<S>& p) {
  const LinOp<S> q = op_Q(m, x, y, p);
  return op_L(a, x, shifted(y, m, -p.c), p) * q - q * op_L(a, x, y, p) +
         p.c * op_Q_euler_derivative(m, a, x, y, p);
}

/// Site operator c beta/((g - c/2)^2 - beta^2) { beta (e_aa - e_abar abar)
/// + (g - c/2)(x_a^{-1} e_{abar a} - x_a e_{a abar}) }.
template <class S>
LinOp<S> cbeta_correction(int a, const S& gamma, const XPoint<S>& x, const ModelParams<S>& p) {
  const int N = p.space.N;
  const S lam = gamma - p.c / S(2);
  const S& xa = x.at(static_cast<std::size_t>(a - 1));
  const S pref = checked_div(p.c * p.beta, lam * lam - p.beta * p.beta, "(gamma - c/2)^2 = beta^2");
  return pref * (p.beta * (unit<S>(lab(a), lab(a), N) - unit<S>(labbar(a), labbar(a), N)) +
                 lam * ((S(1) / xa) * unit<S>(labbar(a), lab(a), N) - xa * unit<S>(lab(a), labbar(a), N)));
}

/// Sum of I_a(x_a|y_j)^{(j)} with y_m replaced by gamma_m, plus M_a^{(m,j)} for
/// j != m and M_a^{(i,j)} for i < j, i, j != m.
template <class S>
LinOp<S> site_pair_form_at(int a, int m, const S& gamma_m, const XPoint<S>& x, const YPoint<S>& y,
                           const ModelParams<S>& p) {
  const Space sp = p.space;
  const S& xa = x.at(static_cast<std::size_t>(a - 1));
  const LinOp<S> M = op_M(a, x, p);
  LinOp<S> out(sp);
  for (int j = 1; j <= sp.n; ++j) {
    const S& g = j == m ? gamma_m : y[static_cast<std::size_t>(j - 1)];
    out = out + embed_site(op_I(a, xa, g, p), j, sp);
  }
  for (int j = 1; j <= sp.n; ++j)
    if (j != m) out = out + embed_pair(M, m, j, sp);
  for (int i = 1; i <= sp.n; ++i)
    for (int j = i + 1; j <= sp.n; ++j)
      if (i != m && j != m) out = out + embed_pair(M, i, j, sp);
  return out;
}

/// Closed form of the second compatibility term.
template <class S>
LinOp<S> expected_second_term(int a, int m, const XPoint<S>& x, const YPoint<S>& y, const ModelParams<S>& p) {
  return site_pair_form_at(a, m, y.at(static_cast<std::size_t>(m - 1)) - p.c, x, y, p);
}

/// Closed form of the third compatibility term.
template <class S>
LinOp<S> expected_third_term(int a, int m, const XPoint<S>& x, const YPoint<S>& y, const ModelParams<S>& p) {
  const S& ym = y.at(static_cast<std::size_t>(m - 1));
  return -(site_pair_form_at(a, m, ym, x, y, p) + embed_site(cbeta_correction(a, ym, x, p), m, p.space));
}

/// The part of I^{(1)} + I^{(2)} + M^{(1,2)} left after removing the
/// non-symmetric remainder; it is invariant under P and commutes with R.
template <class S>
LinOp<S> symmetric_part(int a, const XPoint<S>& x, const S& y1, const S& y2, const ModelParams<S>& p) {
  const int N = p.space.N;
  const Space sp(2, N);
  const S& xa = x.at(static_cast<std::size_t>(a - 1));
  const LinOp<S> full =
      embed_site(op_I(a, xa, y1, p), 1, sp) + embed_site(op_I(a, xa, y2, p), 2, sp) + op_M(a, x, p);
  LinOp<S> rest = (y2 - y1) * embed_site(unit<S>(lab(a), lab(a), N) - unit<S>(labbar(a), labbar(a), N), 2, sp);
  for (int code = 0; code < 2 * N; ++code) {
    const Label q = code_label(code, N);
    rest = rest + p.k * (kron(unit<S>(lab(a), q, N), unit<S>(q, lab(a), N)) +
                         kron(unit<S>(q, labbar(a), N), unit<S>(labbar(a), q, N)));
  }
  return full - rest;
}

/// Residuals of the two intertwining relations of R(lambda) for labels (l, m).
template <class S>
std::pair<LinOp<S>, LinOp<S>> intertwining_residuals(Label l, Label m, const S& lambda, const S& k, int N) {
  const Space sp(2, N);
  const LinOp<S> r = op_R(lambda, k, N);
  const LinOp<S> base = lambda * embed_site(unit<S>(l, m, N), 2, sp);
  LinOp<S> pm_lp(sp);  // sum_p e_pm (x) e_lp
  LinOp<S> lp_pm(sp);  // sum_p e_lp (x) e_pm
  for (int code = 0; code < 2 * N; ++code) {
    const Label q = code_label(code, N);
    pm_lp = pm_lp + kron(unit<S>(q, m, N), unit<S>(l, q, N));
    lp_pm = lp_pm + kron(unit<S>(l, q, N), unit<S>(q, m, N));
  }
  return {r * (base + k * pm_lp) - (base + k * lp_pm) * r, r * (base - k * lp_pm) - (base - k * pm_lp) * r};
}

/// x_a dL_b/dx_a - x_b dL_a/dx_b (only B depends on x).
template <class S>
LinOp<S> cross_derivative_residual(int a, int b, const XPoint<S>& x, const ModelParams<S>& p) {
  return op_B_euler_derivative(b, a, x, p) - op_B_euler_derivative(a, b, x, p);
}

}  // namespace bqkz
