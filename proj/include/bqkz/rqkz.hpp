#pragma once

// Rational R-matrix, boundary K-matrix and the transport operators Q_m of the
// boundary rational qKZ system.

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bqkz/scalar.hpp"
#include "bqkz/tensor.hpp"

namespace bqkz {

/// Parameters c (shift step), k (R-matrix coupling), alpha, beta and the
/// tensor space. All four scalars must be nonzero.
template <class S>
struct ModelParams {
  S c;
  S k;
  S alpha;
  S beta;
  Space space;

  void validate() const {
    if (field_traits<S>::is_zero(c) || field_traits<S>::is_zero(k) || field_traits<S>::is_zero(alpha) ||
        field_traits<S>::is_zero(beta)) {
      throw std::invalid_argument("ModelParams: c, k, alpha, beta must be nonzero");
    }
  }
};

/// x in (C^x)^N.
template <class S>
using XPoint = std::vector<S>;

/// y in C^n.
template <class S>
using YPoint = std::vector<S>;

template <class S>
void validate_x(const XPoint<S>& x, int N) {
  if (static_cast<int>(x.size()) != N) throw std::invalid_argument("XPoint: expected " + std::to_string(N) + " coordinates");
  for (const S& v : x)
    if (field_traits<S>::is_singular(v)) throw std::invalid_argument("XPoint: coordinates must be nonzero");
}

template <class S>
XPoint<S> unit_x(int N) {
  return XPoint<S>(static_cast<std::size_t>(N), field_traits<S>::one());
}

/// y with y_m replaced by y_m + delta (m is 1-based).
template <class S>
YPoint<S> shifted(YPoint<S> y, int m, const S& delta) {
  y.at(static_cast<std::size_t>(m - 1)) += delta;
  return y;
}

/// Reflection operator T(x): v_a -> x_a^{-1} v_{abar}, v_{abar} -> x_a v_a.
template <class S>
LinOp<S> op_T(const XPoint<S>& x) {
  const int N = static_cast<int>(x.size());
  validate_x(x, N);
  LinOpBuilder<S> bld(Space(1, N));
  for (int a = 1; a <= N; ++a) {
    const auto ia = static_cast<std::size_t>(label_code(lab(a), N));
    const auto ib = static_cast<std::size_t>(label_code(labbar(a), N));
    const S& xa = x[static_cast<std::size_t>(a - 1)];
    bld.add(ib, ia, field_traits<S>::one() / xa);
    bld.add(ia, ib, xa);
  }
  return std::move(bld).build();
}

/// x_a dT(x)/dx_a = x_a e_{a abar} - x_a^{-1} e_{abar a}.
template <class S>
LinOp<S> op_T_euler_derivative(const XPoint<S>& x, int a) {
  const int N = static_cast<int>(x.size());
  const S& xa = x.at(static_cast<std::size_t>(a - 1));
  LinOpBuilder<S> bld(Space(1, N));
  const auto ia = static_cast<std::size_t>(label_code(lab(a), N));
  const auto ib = static_cast<std::size_t>(label_code(labbar(a), N));
  bld.add(ia, ib, xa);
  bld.add(ib, ia, -(field_traits<S>::one() / xa));
  return std::move(bld).build();
}

/// R(lambda) = (lambda + k P) / (lambda + k) on V (x) V.
template <class S>
LinOp<S> op_R(const S& lambda, const S& k, int N) {
  const S inv = checked_inverse(lambda + k, "R-matrix at lambda = -k");
  LinOp<S> id = LinOp<S>::identity(Space(2, N));
  return (lambda * inv) * id + (k * inv) * swap_op<S>(N);
}

/// K(lambda | x, beta) = (lambda T(x) + beta) / (lambda + beta) on V.
template <class S>
LinOp<S> op_K(const S& lambda, const XPoint<S>& x, const S& beta) {
  const S inv = checked_inverse(lambda + beta, "K-matrix at lambda = -beta");
  const int N = static_cast<int>(x.size());
  return (lambda * inv) * op_T(x) + (beta * inv) * LinOp<S>::identity(Space(1, N));
}

/// x_a dK(lambda|x,beta)/dx_a.
template <class S>
LinOp<S> op_K_euler_derivative(const S& lambda, const XPoint<S>& x, const S& beta, int a) {
  const S inv = checked_inverse(lambda + beta, "K-matrix at lambda = -beta");
  return (lambda * inv) * op_T_euler_derivative(x, a);
}

// ---------------------------------------------------------------------------
// Transport operators

enum class FactorKind {
  R,           // R_{i,j}(arg)
  KBoundaryX,  // K_i(arg | x, beta)
  KBoundaryOne // K_i(arg | 1, alpha)
};

/// One factor of an ordered operator product.
template <class S>
struct Factor {
  FactorKind kind;
  int i;
  int j;  // unused for K factors
  S arg;
};

/// Ordered factors of Q_m(x|y), split as Q'_m, K_m(y_m - c/2 | x, beta), Q''_m.
template <class S>
struct QFactors {
  std::vector<Factor<S>> lead;
  Factor<S> middle;
  std::vector<Factor<S>> tail;

  std::vector<Factor<S>> all() const {
    std::vector<Factor<S>> out = lead;
    out.push_back(middle);
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
  }
};

template <class S>
QFactors<S> q_factors(int m, const YPoint<S>& y, const ModelParams<S>& p) {
  const int n = p.space.n;
  if (m < 1 || m > n) throw std::out_of_range("Q_m: m outside 1..n");
  if (static_cast<int>(y.size()) != n) throw std::invalid_argument("YPoint: expected n coordinates");
  auto Y = [&](int j) -> const S& { return y[static_cast<std::size_t>(j - 1)]; };
  const S half_c = p.c / S(2);

  QFactors<S> q{{}, {FactorKind::KBoundaryX, m, 0, Y(m) - half_c}, {}};
  // R_{m,m-1}(y_m - y_{m-1} - c) ... R_{m,1}(y_m - y_1 - c)
  for (int j = m - 1; j >= 1; --j) q.lead.push_back({FactorKind::R, m, j, Y(m) - Y(j) - p.c});
  // R_{1,m}(y_1 + y_m) ... R_{m-1,m}(y_{m-1} + y_m)
  for (int j = 1; j <= m - 1; ++j) q.tail.push_back({FactorKind::R, j, m, Y(j) + Y(m)});
  // R_{m,m+1}(y_m + y_{m+1}) ... R_{m,n}(y_m + y_n)
  for (int j = m + 1; j <= n; ++j) q.tail.push_back({FactorKind::R, m, j, Y(m) + Y(j)});
  q.tail.push_back({FactorKind::KBoundaryOne, m, 0, Y(m)});
  // R_{m,n}(y_m - y_n) ... R_{m,m+1}(y_m - y_{m+1})
  for (int j = n; j >= m + 1; --j) q.tail.push_back({FactorKind::R, m, j, Y(m) - Y(j)});
  return q;
}

/// Local (site or two-site) operator of a factor, before embedding.
template <class S>
LinOp<S> factor_local(const Factor<S>& f, const XPoint<S>& x, const ModelParams<S>& p) {
  switch (f.kind) {
    case FactorKind::R:
      return op_R(f.arg, p.k, p.space.N);
    case FactorKind::KBoundaryX:
      return op_K(f.arg, x, p.beta);
    case FactorKind::KBoundaryOne:
      return op_K(f.arg, unit_x<S>(p.space.N), p.alpha);
  }
  throw std::logic_error("unknown factor kind");
}

template <class S>
LinOp<S> embed_factor_local(const LinOp<S>& local, const Factor<S>& f, Space sp) {
  if (f.kind == FactorKind::R) return embed_pair(local, f.i, f.j, sp);
  return embed_site(local, f.i, sp);
}

template <class S>
LinOp<S> factor_op(const Factor<S>& f, const XPoint<S>& x, const ModelParams<S>& p) {
  return embed_factor_local(factor_local(f, x, p), f, p.space);
}

/// Inverse of a factor, by exact elimination of the local block.
template <class S>
LinOp<S> factor_inverse(const Factor<S>& f, const XPoint<S>& x, const ModelParams<S>& p) {
  return embed_factor_local(invert(factor_local(f, x, p)), f, p.space);
}

template <class S>
LinOp<S> product_of(std::span<const Factor<S>> fs, const XPoint<S>& x, const ModelParams<S>& p) {
  LinOp<S> out = LinOp<S>::identity(p.space);
  for (const Factor<S>& f : fs) out = out * factor_op(f, x, p);
  return out;
}

/// (f_1 ... f_r)^{-1} = f_r^{-1} ... f_1^{-1}.
template <class S>
LinOp<S> inverse_product_of(std::span<const Factor<S>> fs, const XPoint<S>& x, const ModelParams<S>& p) {
  LinOp<S> out = LinOp<S>::identity(p.space);
  for (auto it = fs.rbegin(); it != fs.rend(); ++it) out = out * factor_inverse(*it, x, p);
  return out;
}

template <class S>
LinOp<S> op_Q(int m, const XPoint<S>& x, const YPoint<S>& y, const ModelParams<S>& p) {
  validate_x(x, p.space.N);
  const auto fs = q_factors(m, y, p).all();
  return product_of<S>(fs, x, p);
}

template <class S>
LinOp<S> op_Q_inverse(int m, const XPoint<S>& x, const YPoint<S>& y, const ModelParams<S>& p) {
  validate_x(x, p.space.N);
  const auto fs = q_factors(m, y, p).all();
  return inverse_product_of<S>(fs, x, p);
}

template <class S>
struct QSplit {
  LinOp<S> lead;    // Q'_m
  LinOp<S> middle;  // K_m(y_m - c/2 | x, beta)
  LinOp<S> tail;    // Q''_m
};

template <class S>
QSplit<S> op_Q_split(int m, const XPoint<S>& x, const YPoint<S>& y, const ModelParams<S>& p) {
  validate_x(x, p.space.N);
  const QFactors<S> q = q_factors(m, y, p);
  return {product_of<S>(q.lead, x, p), factor_op(q.middle, x, p), product_of<S>(q.tail, x, p)};
}

/// x_a dQ_m/dx_a; only the K(y_m - c/2 | x, beta) factor depends on x.
template <class S>
LinOp<S> op_Q_euler_derivative(int m, int a, const XPoint<S>& x, const YPoint<S>& y, const ModelParams<S>& p) {
  const QFactors<S> q = q_factors(m, y, p);
  const LinOp<S> dK = embed_site(op_K_euler_derivative(q.middle.arg, x, p.beta, a), m, p.space);
  return product_of<S>(q.lead, x, p) * dK * product_of<S>(q.tail, x, p);
}

// ---------------------------------------------------------------------------
// Residuals of the defining identities

/// R12(l1-l2) R13(l1-l3) R23(l2-l3) - R23(l2-l3) R13(l1-l3) R12(l1-l2) on V^{(x)3}.
template <class S>
LinOp<S> ybe_residual(const S& l1, const S& l2, const S& l3, const S& k, int N) {
  const Space sp(3, N);
  const LinOp<S> r12 = embed_pair(op_R(l1 - l2, k, N), 1, 2, sp);
  const LinOp<S> r13 = embed_pair(op_R(l1 - l3, k, N), 1, 3, sp);
  const LinOp<S> r23 = embed_pair(op_R(l2 - l3, k, N), 2, 3, sp);
  return r12 * r13 * r23 - r23 * r13 * r12;
}

/// Boundary Yang-Baxter (reflection) equation residual on V^{(x)2}.
template <class S>
LinOp<S> bybe_residual(const S& l1, const S& l2, const XPoint<S>& x, const S& beta, const S& k) {
  const int N = static_cast<int>(x.size());
  const Space sp(2, N);
  const LinOp<S> r12 = embed_pair(op_R(l1 - l2, k, N), 1, 2, sp);
  const LinOp<S> r21 = embed_pair(op_R(l1 + l2, k, N), 2, 1, sp);
  const LinOp<S> k1 = embed_site(op_K(l1, x, beta), 1, sp);
  const LinOp<S> k2 = embed_site(op_K(l2, x, beta), 2, sp);
  return r12 * k1 * r21 * k2 - k2 * r21 * k1 * r12;
}

/// Q_m(..., y_l - c, ...) Q_l(y) - Q_l(..., y_m - c, ...) Q_m(y).
template <class S>
LinOp<S> qkz_consistency_residual(int l, int m, const XPoint<S>& x, const YPoint<S>& y, const ModelParams<S>& p) {
  const LinOp<S> lhs = op_Q(m, x, shifted(y, l, -p.c), p) * op_Q(l, x, y, p);
  const LinOp<S> rhs = op_Q(l, x, shifted(y, m, -p.c), p) * op_Q(m, x, y, p);
  return lhs - rhs;
}

}  // namespace bqkz
