#pragma once

// The signed-permutation group W_0 of type C_n acting on V^{(x)n} with N = n,
// the cyclic submodule generated by v_1 (x) ... (x) v_n, the right action by
// T_1(x), P_{i,i+1}, T_n(1), and the degenerate transport operator Cbar_m.

#include <algorithm>
#include <compare>
#include <cstdlib>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bqkz/compat.hpp"
#include "bqkz/rqkz.hpp"
#include "bqkz/tensor.hpp"

namespace bqkz {

/// w in W_0 stored by its images: w(i) = +-j. Label a corresponds to +a,
/// abar to -a.
class SignedPerm {
 public:
  explicit SignedPerm(int n = 1) : img_(static_cast<std::size_t>(n)) {
    for (int i = 1; i <= n; ++i) img_[static_cast<std::size_t>(i - 1)] = i;
  }

  static SignedPerm from_images(std::vector<int> img) {
    SignedPerm w(static_cast<int>(img.size()));
    std::vector<bool> seen(img.size() + 1, false);
    for (int v : img) {
      const auto j = static_cast<std::size_t>(std::abs(v));
      if (j < 1 || j > img.size() || seen[j]) throw std::invalid_argument("SignedPerm: not a signed permutation");
      seen[j] = true;
    }
    w.img_ = std::move(img);
    return w;
  }

  int n() const { return static_cast<int>(img_.size()); }

  /// w(i) for i in +-{1..n}.
  int operator()(int i) const {
    const int v = img_.at(static_cast<std::size_t>(std::abs(i) - 1));
    return i > 0 ? v : -v;
  }

  const std::vector<int>& images() const { return img_; }

  SignedPerm inverse() const {
    std::vector<int> inv(img_.size());
    for (int i = 1; i <= n(); ++i) {
      const int v = (*this)(i);
      inv[static_cast<std::size_t>(std::abs(v) - 1)] = v > 0 ? i : -i;
    }
    return from_images(std::move(inv));
  }

  /// (a * b)(i) = a(b(i)).
  friend SignedPerm operator*(const SignedPerm& a, const SignedPerm& b) {
    if (a.n() != b.n()) throw std::invalid_argument("SignedPerm: rank mismatch");
    std::vector<int> img(a.img_.size());
    for (int i = 1; i <= a.n(); ++i) img[static_cast<std::size_t>(i - 1)] = a(b(i));
    return from_images(std::move(img));
  }

  friend bool operator==(const SignedPerm&, const SignedPerm&) = default;
  friend auto operator<=>(const SignedPerm& a, const SignedPerm& b) { return a.img_ <=> b.img_; }

  std::string str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < img_.size(); ++i) s += (i ? "," : "") + std::to_string(img_[i]);
    return s + "]";
  }

 private:
  std::vector<int> img_;
};

/// Generator s_i of W_0: the transposition (i, i+1) for i < n, the sign flip
/// of n for i = n.
inline SignedPerm gen_s(int i, int n) {
  if (i < 1 || i > n) throw std::out_of_range("gen_s: index outside 1..n");
  std::vector<int> img(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) img[static_cast<std::size_t>(j - 1)] = j;
  if (i < n) {
    std::swap(img[static_cast<std::size_t>(i - 1)], img[static_cast<std::size_t>(i)]);
  } else {
    img[static_cast<std::size_t>(n - 1)] = -n;
  }
  return SignedPerm::from_images(std::move(img));
}

/// r_i: sign flip of i.
inline SignedPerm gen_r(int i, int n) {
  std::vector<int> img(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) img[static_cast<std::size_t>(j - 1)] = j;
  img.at(static_cast<std::size_t>(i - 1)) = -i;
  return SignedPerm::from_images(std::move(img));
}

/// s_{ij}: transposition of i and j.
inline SignedPerm transposition(int i, int j, int n) {
  std::vector<int> img(static_cast<std::size_t>(n));
  for (int q = 1; q <= n; ++q) img[static_cast<std::size_t>(q - 1)] = q;
  std::swap(img.at(static_cast<std::size_t>(i - 1)), img.at(static_cast<std::size_t>(j - 1)));
  return SignedPerm::from_images(std::move(img));
}

/// stilde_{ij} = r_i r_j s_{ij}.
inline SignedPerm signed_transposition(int i, int j, int n) {
  return gen_r(i, n) * gen_r(j, n) * transposition(i, j, n);
}

/// Product of generators s_{w[0]} s_{w[1]} ...
inline SignedPerm word_element(const std::vector<int>& word, int n) {
  SignedPerm w(n);
  for (int i : word) w = w * gen_s(i, n);
  return w;
}

/// All 2^n n! elements with a shortest word in s_1..s_n for each.
inline std::map<SignedPerm, std::vector<int>> group_words(int n) {
  std::map<SignedPerm, std::vector<int>> words;
  std::deque<SignedPerm> queue;
  words.emplace(SignedPerm(n), std::vector<int>{});
  queue.push_back(SignedPerm(n));
  while (!queue.empty()) {
    const SignedPerm g = queue.front();
    queue.pop_front();
    for (int i = 1; i <= n; ++i) {
      SignedPerm h = g * gen_s(i, n);
      if (words.count(h)) continue;
      std::vector<int> w = words.at(g);
      w.push_back(i);
      words.emplace(h, std::move(w));
      queue.push_back(std::move(h));
    }
  }
  return words;
}

inline std::vector<SignedPerm> group_elements(int n) {
  std::vector<SignedPerm> out;
  for (const auto& [g, w] : group_words(n)) out.push_back(g);
  return out;
}

// ---------------------------------------------------------------------------
// Left action, the map phi and the orbit

inline void require_square(Space sp) {
  if (sp.N != sp.n) throw std::invalid_argument("W_0 module requires N = n");
}

inline Label act_on_label(const SignedPerm& w, Label l) {
  const int v = w(l.bar ? -l.a : l.a);
  return v > 0 ? lab(v) : labbar(-v);
}

/// rho_L(w) = w^{(x)n}, acting on labels sitewise.
template <class S>
LinOp<S> rhoL(const SignedPerm& w, Space sp) {
  require_square(sp);
  if (w.n() != sp.n) throw std::invalid_argument("rhoL: rank mismatch");
  LinOpBuilder<S> bld(sp);
  for (std::size_t col = 0; col < sp.dim(); ++col) {
    std::vector<Label> labels = multi_index(sp, col);
    for (Label& l : labels) l = act_on_label(w, l);
    bld.add(linear_index(sp, labels), col, field_traits<S>::one());
  }
  return std::move(bld).build();
}

/// Linear index of phi(w) = v_{w(1)} (x) ... (x) v_{w(n)}.
inline std::size_t phi_index(const SignedPerm& w, Space sp) {
  require_square(sp);
  std::vector<Label> labels;
  for (int i = 1; i <= sp.n; ++i) labels.push_back(act_on_label(w, lab(i)));
  return linear_index(sp, labels);
}

template <class S>
Vec<S> phi(const SignedPerm& w, Space sp) {
  return Vec<S>::basis(sp, phi_index(w, sp));
}

/// Basis of the cyclic submodule: the coordinate vectors phi(w).
struct OrbitBasis {
  Space space;
  std::vector<SignedPerm> elements;
  std::vector<std::size_t> indices;  // sorted
  std::map<std::size_t, SignedPerm> by_index;

  explicit OrbitBasis(Space sp) : space(sp) {
    require_square(sp);
    elements = group_elements(sp.n);
    for (const SignedPerm& w : elements) {
      const std::size_t idx = phi_index(w, sp);
      by_index.emplace(idx, w);
      indices.push_back(idx);
    }
    std::sort(indices.begin(), indices.end());
  }

  std::size_t size() const { return indices.size(); }
  bool contains(std::size_t idx) const { return by_index.count(idx) != 0; }
};

/// op restricted to the orbit: the columns outside the submodule are dropped.
template <class S>
LinOp<S> restrict_to(const LinOp<S>& op, const OrbitBasis& orbit) {
  LinOpBuilder<S> bld(op.space());
  for (std::size_t i = 0; i < op.dim(); ++i)
    for (const auto& [j, v] : op.row(i))
      if (orbit.contains(j)) bld.add(i, j, v);
  return std::move(bld).build();
}

/// True iff op maps every orbit vector back into the orbit span.
template <class S>
bool preserves_orbit(const LinOp<S>& op, const OrbitBasis& orbit) {
  for (std::size_t i = 0; i < op.dim(); ++i) {
    if (orbit.contains(i)) continue;
    for (const auto& e : op.row(i))
      if (orbit.contains(e.first)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Right action

/// rho_R(s_0) = T_1(x), rho_R(s_i) = P_{i,i+1}, rho_R(s_n) = T_n(1).
template <class S>
LinOp<S> rhoR_generator(int g, const XPoint<S>& x, Space sp) {
  require_square(sp);
  if (g == 0) return embed_site(op_T(x), 1, sp);
  if (g >= 1 && g < sp.n) return embed_pair(swap_op<S>(sp.N), g, g + 1, sp);
  if (g == sp.n) return embed_site(op_T(unit_x<S>(sp.N)), sp.n, sp);
  throw std::out_of_range("rhoR_generator: generator index outside 0..n");
}

/// rho_R of the word g_1 g_2 ... g_r = rho_R(g_r) ... rho_R(g_1).
template <class S>
LinOp<S> rhoR_word(const std::vector<int>& word, const XPoint<S>& x, Space sp) {
  LinOp<S> out = LinOp<S>::identity(sp);
  for (int g : word) out = rhoR_generator<S>(g, x, sp) * out;
  return out;
}

// ---------------------------------------------------------------------------
// Left action of y_a through the degenerate affine Hecke relations

/// Coefficients of y_a w in the basis W_0 after moving y to the right and
/// evaluating it on the cyclic vector: y_b -> y_b.
template <class S>
std::map<SignedPerm, S> eta_L_y(int a, const SignedPerm& w, const YPoint<S>& y, const ModelParams<S>& p) {
  const int n = w.n();
  const std::vector<int> word = group_words(n).at(w);
  struct Term {
    SignedPerm prefix;
    int yb;         // 0 for a pure group element
    std::size_t pos;  // next letter of `word` to absorb
    S coeff;
  };
  std::map<SignedPerm, S> out;
  std::vector<Term> stack{{SignedPerm(n), a, 0, field_traits<S>::one()}};
  while (!stack.empty()) {
    Term t = std::move(stack.back());
    stack.pop_back();
    if (t.pos == word.size() || t.yb == 0) {
      SignedPerm g = t.prefix;
      for (std::size_t q = t.pos; q < word.size(); ++q) g = g * gen_s(word[q], n);
      const S val = t.yb == 0 ? t.coeff : t.coeff * y.at(static_cast<std::size_t>(t.yb - 1));
      auto [it, fresh] = out.try_emplace(g, val);
      if (!fresh) it->second += val;
      continue;
    }
    const int i = word[t.pos];
    const SignedPerm moved = t.prefix * gen_s(i, n);
    if (i < n && t.yb == i) {
      // y_i s_i = s_i y_{i+1} + k
      stack.push_back({moved, i + 1, t.pos + 1, t.coeff});
      stack.push_back({t.prefix, 0, t.pos + 1, t.coeff * p.k});
    } else if (i < n && t.yb == i + 1) {
      // y_{i+1} s_i = s_i y_i - k
      stack.push_back({moved, i, t.pos + 1, t.coeff});
      stack.push_back({t.prefix, 0, t.pos + 1, -(t.coeff * p.k)});
    } else if (i == n && t.yb == n) {
      // y_n s_n = -s_n y_n + 2 alpha
      stack.push_back({moved, n, t.pos + 1, -t.coeff});
      stack.push_back({t.prefix, 0, t.pos + 1, t.coeff * S(2) * p.alpha});
    } else {
      stack.push_back({moved, t.yb, t.pos + 1, t.coeff});
    }
  }
  for (auto it = out.begin(); it != out.end();) {
    if (field_traits<S>::is_zero(it->second)) {
      it = out.erase(it);
    } else {
      ++it;
    }
  }
  return out;
}

template <class S>
Vec<S> phi_combination(const std::map<SignedPerm, S>& coeffs, Space sp) {
  Vec<S> v(sp);
  for (const auto& [g, c] : coeffs) v.add(phi_index(g, sp), c);
  return v;
}

/// Residuals of the degenerate affine Hecke relations satisfied by A_i(y)
/// and rho_L(s_j), restricted to the orbit.
template <class S>
std::vector<std::pair<std::string, LinOp<S>>> aha_residuals(const YPoint<S>& y, const ModelParams<S>& p,
                                                            const OrbitBasis& orbit) {
  const Space sp = p.space;
  require_square(sp);
  const int n = sp.n;
  std::vector<LinOp<S>> A;
  std::vector<LinOp<S>> s;
  for (int i = 1; i <= n; ++i) {
    A.push_back(op_A(i, y, p));
    s.push_back(rhoL<S>(gen_s(i, n), sp));
  }
  auto Ai = [&](int i) -> const LinOp<S>& { return A[static_cast<std::size_t>(i - 1)]; };
  auto si = [&](int i) -> const LinOp<S>& { return s[static_cast<std::size_t>(i - 1)]; };
  const LinOp<S> id = LinOp<S>::identity(sp);

  std::vector<std::pair<std::string, LinOp<S>>> out;
  for (int i = 1; i < n; ++i)
    out.emplace_back("A_" + std::to_string(i) + " s_" + std::to_string(i) + " - s_" + std::to_string(i) + " A_" +
                         std::to_string(i + 1) + " - k",
                     restrict_to(Ai(i) * si(i) - si(i) * Ai(i + 1) - p.k * id, orbit));
  out.emplace_back("A_n s_n + s_n A_n - 2 alpha",
                   restrict_to(Ai(n) * si(n) + si(n) * Ai(n) - (S(2) * p.alpha) * id, orbit));
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      const bool far = std::abs(i - j) > 1 || (i == n - 1 && j == n);
      if (!far) continue;
      out.emplace_back("[A_" + std::to_string(i) + ", s_" + std::to_string(j) + "]",
                       restrict_to(commutator(Ai(i), si(j)), orbit));
    }
  return out;
}

// ---------------------------------------------------------------------------
// Degenerate transport operator

enum class CbarKind { K0, R, Kn };

template <class S>
struct CbarFactor {
  CbarKind kind;
  int i;  // R: acts through P_{i,i+1}
  S arg;
};

template <class S>
std::vector<CbarFactor<S>> cbar_factors(int m, const YPoint<S>& y, const ModelParams<S>& p) {
  const int n = p.space.n;
  if (m < 1 || m > n) throw std::out_of_range("Cbar: m outside 1..n");
  auto Y = [&](int j) -> const S& { return y.at(static_cast<std::size_t>(j - 1)); };
  std::vector<CbarFactor<S>> fs;
  for (int i = m; i <= n - 1; ++i) fs.push_back({CbarKind::R, i, Y(i + 1) - Y(m)});
  fs.push_back({CbarKind::Kn, n, Y(m)});
  for (int i = n - 1; i >= m; --i) fs.push_back({CbarKind::R, i, -Y(m) - Y(i + 1)});
  for (int i = m - 1; i >= 1; --i) fs.push_back({CbarKind::R, i, -Y(i) - Y(m)});
  fs.push_back({CbarKind::K0, 1, -Y(m)});
  for (int i = 1; i <= m - 1; ++i) fs.push_back({CbarKind::R, i, Y(i) - Y(m) + p.c});
  return fs;
}

template <class S>
LinOp<S> cbar_factor_op(const CbarFactor<S>& f, const XPoint<S>& x, const ModelParams<S>& p) {
  const Space sp = p.space;
  const LinOp<S> id = LinOp<S>::identity(sp);
  switch (f.kind) {
    case CbarKind::K0: {
      const S shift = f.arg + p.c / S(2);
      const S inv = checked_inverse(shift + p.beta, "Kbar_0 denominator");
      return (shift * inv) * rhoR_generator<S>(0, x, sp) + (p.beta * inv) * id;
    }
    case CbarKind::R: {
      const S inv = checked_inverse(f.arg + p.k, "Rbar denominator");
      return (f.arg * inv) * rhoR_generator<S>(f.i, x, sp) + (p.k * inv) * id;
    }
    case CbarKind::Kn: {
      const S inv = checked_inverse(f.arg - p.alpha, "Kbar_n denominator");
      return (f.arg * inv) * rhoR_generator<S>(sp.n, x, sp) - (p.alpha * inv) * id;
    }
  }
  throw std::logic_error("unknown Cbar factor");
}

template <class S>
LinOp<S> op_Cbar(int m, const XPoint<S>& x, const YPoint<S>& y, const ModelParams<S>& p) {
  require_square(p.space);
  validate_x(x, p.space.N);
  LinOp<S> out = LinOp<S>::identity(p.space);
  for (const CbarFactor<S>& f : cbar_factors(m, y, p)) out = out * cbar_factor_op(f, x, p);
  return out;
}

template <class S>
S p_m(int m, const YPoint<S>& y, const ModelParams<S>& p) {
  const int n = p.space.n;
  auto Y = [&](int j) -> const S& { return y.at(static_cast<std::size_t>(j - 1)); };
  S r = (Y(m) - p.alpha) * (Y(m) - p.beta - p.c / S(2));
  for (int j = 1; j < m; ++j) r = r * (Y(m) - Y(j) - p.c - p.k);
  for (int j = m + 1; j <= n; ++j) r = r * (Y(m) - Y(j) - p.k);
  for (int j = 1; j <= n; ++j)
    if (j != m) r = r * (Y(m) + Y(j) - p.k);
  return r;
}

/// p_m(y)^{-1} times the product of the unnormalized factors (l P - k),
/// (y_m T_n(1) - alpha), ((y_m - c/2) T_1(x) - beta).
template <class S>
LinOp<S> op_Cbar_grouped(int m, const XPoint<S>& x, const YPoint<S>& y, const ModelParams<S>& p) {
  const Space sp = p.space;
  const int n = sp.n;
  auto Y = [&](int j) -> const S& { return y.at(static_cast<std::size_t>(j - 1)); };
  const LinOp<S> id = LinOp<S>::identity(sp);
  auto pk = [&](const S& l, int i) { return l * rhoR_generator<S>(i, x, sp) - p.k * id; };

  LinOp<S> out = id;
  for (int i = m; i <= n - 1; ++i) out = out * pk(Y(m) - Y(i + 1), i);
  out = out * (Y(m) * rhoR_generator<S>(n, x, sp) - p.alpha * id);
  for (int i = n - 1; i >= m; --i) out = out * pk(Y(m) + Y(i + 1), i);
  for (int i = m - 1; i >= 1; --i) out = out * pk(Y(m) + Y(i), i);
  out = out * ((Y(m) - p.c / S(2)) * rhoR_generator<S>(0, x, sp) - p.beta * id);
  for (int i = 1; i <= m - 1; ++i) out = out * pk(Y(m) - Y(i) - p.c, i);
  return checked_inverse(p_m(m, y, p), "p_m(y) = 0") * out;
}

// ---------------------------------------------------------------------------
// L_a on the submodule

/// Residuals of the four restriction identities for label a (all b != a).
template <class S>
std::vector<std::pair<std::string, LinOp<S>>> l_restriction_residuals(int a, const ModelParams<S>& p,
                                                                      const OrbitBasis& orbit) {
  const Space sp = p.space;
  require_square(sp);
  const int n = sp.n;
  std::vector<std::pair<std::string, LinOp<S>>> out;
  const std::string as = std::to_string(a);
  out.emplace_back("sum_j Ebar_aa^(j) - r_" + as,
                   restrict_to(sum_over_sites(op_Ebar<S>(a, a, n), sp) - rhoL<S>(gen_r(a, n), sp), orbit));
  out.emplace_back("Y_aa + Z_aa", restrict_to(op_Y<S>(a, a, sp) + op_Z<S>(a, a, sp), orbit));
  for (int b = 1; b <= n; ++b) {
    if (b == a) continue;
    const std::string bs = std::to_string(b);
    out.emplace_back("X_ab + X_ba - s_ab (b=" + bs + ")",
                     restrict_to(op_X<S>(a, b, sp) + op_X<S>(b, a, sp) - rhoL<S>(transposition(a, b, n), sp), orbit));
    out.emplace_back(
        "Y_ab + Z_ab - stilde_ab (b=" + bs + ")",
        restrict_to(op_Y<S>(a, b, sp) + op_Z<S>(a, b, sp) - rhoL<S>(signed_transposition(a, b, n), sp), orbit));
  }
  return out;
}

/// L_a written through the left W_0 action: A_a(y) + 2(alpha + beta x_a)/(x_a^2 - 1) r_a
/// + k { sum_p exchange(a,p) s_ap + sum_{p != a} 1/(x_a x_p - 1) stilde_ap }.
template <class S>
LinOp<S> op_L_group_form(int a, const XPoint<S>& x, const YPoint<S>& y, const ModelParams<S>& p) {
  const Space sp = p.space;
  require_square(sp);
  const int n = sp.n;
  const XCoefficients<S> cf{x, p};
  LinOp<S> out = op_A(a, y, p) + cf.boundary(a) * rhoL<S>(gen_r(a, n), sp);
  LinOp<S> coupling(sp);
  for (int q = 1; q <= n; ++q) {
    if (q == a) continue;
    coupling = coupling + cf.exchange(a, q) * rhoL<S>(transposition(a, q, n), sp) +
               cf.reflect(a, q) * rhoL<S>(signed_transposition(a, q, n), sp);
  }
  return out + p.k * coupling;
}

}  // namespace bqkz
