#pragma once

// Sparse linear operators on V^{(x)n}, dim V = 2N, generic over the scalar
// field. Basis labels of V are v_1..v_N, v_{1bar}..v_{Nbar}; site 1 is the
// most significant digit of the linear index.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bqkz/scalar.hpp"

namespace bqkz {

struct SingularMatrix : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SpaceMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// v_a (bar = false) or v_{abar} (bar = true), 1 <= a <= N.
struct Label {
  int a = 1;
  bool bar = false;

  Label flipped() const { return {a, !bar}; }
  friend bool operator==(const Label&, const Label&) = default;
};

inline Label lab(int a) { return {a, false}; }
inline Label labbar(int a) { return {a, true}; }

/// Tensor power V^{(x)n} with dim V = 2N.
struct Space {
  int n = 1;
  int N = 1;

  Space() = default;
  Space(int n_, int N_) : n(n_), N(N_) {
    if (n < 1 || N < 1) throw std::invalid_argument("Space: n and N must be positive");
  }

  int d() const { return 2 * N; }
  std::size_t dim() const {
    std::size_t r = 1;
    for (int i = 0; i < n; ++i) r *= static_cast<std::size_t>(d());
    return r;
  }
  /// Place value of site j (1-based).
  std::size_t stride(int j) const {
    std::size_t r = 1;
    for (int i = j; i < n; ++i) r *= static_cast<std::size_t>(d());
    return r;
  }
  int digit(std::size_t index, int j) const {
    return static_cast<int>((index / stride(j)) % static_cast<std::size_t>(d()));
  }

  friend bool operator==(const Space&, const Space&) = default;
};

inline int label_code(Label l, int N) {
  if (l.a < 1 || l.a > N) {
    throw std::out_of_range("label index " + std::to_string(l.a) + " outside 1.." + std::to_string(N));
  }
  return l.bar ? N + l.a - 1 : l.a - 1;
}

inline Label code_label(int code, int N) {
  return code < N ? Label{code + 1, false} : Label{code - N + 1, true};
}

/// Linear index of v_{l_1} (x) ... (x) v_{l_n}.
inline std::size_t linear_index(const Space& sp, std::span<const Label> labels) {
  if (static_cast<int>(labels.size()) != sp.n) throw SpaceMismatch("multi-index length differs from n");
  std::size_t idx = 0;
  for (const Label& l : labels) idx = idx * static_cast<std::size_t>(sp.d()) + static_cast<std::size_t>(label_code(l, sp.N));
  return idx;
}

inline std::vector<Label> multi_index(const Space& sp, std::size_t index) {
  std::vector<Label> out(static_cast<std::size_t>(sp.n));
  for (int j = 1; j <= sp.n; ++j) out[static_cast<std::size_t>(j - 1)] = code_label(sp.digit(index, j), sp.N);
  return out;
}

template <class S>
class LinOpBuilder;

/// Sparse square operator on a Space, stored row-major with sorted columns.
/// Never stores an exact zero.
template <class S>
class LinOp {
 public:
  using Entry = std::pair<std::size_t, S>;
  using Row = std::vector<Entry>;

  LinOp() : LinOp(Space(1, 1)) {}
  explicit LinOp(Space sp) : space_(sp), rows_(sp.dim()) {}

  static LinOp identity(Space sp) {
    LinOp op(sp);
    for (std::size_t i = 0; i < op.rows_.size(); ++i) op.rows_[i].emplace_back(i, field_traits<S>::one());
    return op;
  }

  const Space& space() const { return space_; }
  std::size_t dim() const { return rows_.size(); }
  const Row& row(std::size_t i) const { return rows_[i]; }

  S at(std::size_t i, std::size_t j) const {
    const Row& r = rows_.at(i);
    auto it = std::lower_bound(r.begin(), r.end(), j, [](const Entry& e, std::size_t c) { return e.first < c; });
    if (it != r.end() && it->first == j) return it->second;
    return field_traits<S>::zero();
  }

  std::size_t nnz() const {
    std::size_t c = 0;
    for (const Row& r : rows_) c += r.size();
    return c;
  }
  bool is_zero() const { return nnz() == 0; }

  LinOp operator-() const {
    LinOp out = *this;
    for (Row& r : out.rows_)
      for (Entry& e : r) e.second = -e.second;
    return out;
  }

  friend bool operator==(const LinOp& a, const LinOp& b) {
    if (!(a.space_ == b.space_)) return false;
    for (std::size_t i = 0; i < a.rows_.size(); ++i) {
      const Row& ra = a.rows_[i];
      const Row& rb = b.rows_[i];
      if (ra.size() != rb.size()) return false;
      for (std::size_t k = 0; k < ra.size(); ++k) {
        if (ra[k].first != rb[k].first || !(ra[k].second == rb[k].second)) return false;
      }
    }
    return true;
  }

 private:
  friend class LinOpBuilder<S>;
  Space space_;
  std::vector<Row> rows_;
};

/// Accumulates entries, then emits a LinOp with zeros dropped.
template <class S>
class LinOpBuilder {
 public:
  explicit LinOpBuilder(Space sp) : space_(sp), acc_(sp.dim()) {}

  void add(std::size_t i, std::size_t j, const S& v) {
    if (field_traits<S>::is_zero(v)) return;
    auto [it, inserted] = acc_[i].try_emplace(j, v);
    if (!inserted) it->second += v;
  }

  void add_row(std::size_t i, const std::map<std::size_t, S>& row) {
    for (const auto& [j, v] : row) add(i, j, v);
  }

  LinOp<S> build() && {
    LinOp<S> op(space_);
    for (std::size_t i = 0; i < acc_.size(); ++i) {
      auto& out = op.rows_[i];
      out.reserve(acc_[i].size());
      for (auto& [j, v] : acc_[i])
        if (!field_traits<S>::is_zero(v)) out.emplace_back(j, std::move(v));
    }
    return op;
  }

 private:
  Space space_;
  std::vector<std::map<std::size_t, S>> acc_;
};

/// Sparse vector in V^{(x)n}.
template <class S>
class Vec {
 public:
  Vec() : Vec(Space(1, 1)) {}
  explicit Vec(Space sp) : space_(sp) {}

  static Vec basis(Space sp, std::size_t index) {
    Vec v(sp);
    v.set(index, field_traits<S>::one());
    return v;
  }
  static Vec basis(Space sp, std::span<const Label> labels) { return basis(sp, linear_index(sp, labels)); }

  const Space& space() const { return space_; }
  const std::map<std::size_t, S>& entries() const { return entries_; }

  S at(std::size_t i) const {
    auto it = entries_.find(i);
    return it == entries_.end() ? field_traits<S>::zero() : it->second;
  }

  void set(std::size_t i, const S& v) {
    if (field_traits<S>::is_zero(v)) {
      entries_.erase(i);
    } else {
      entries_[i] = v;
    }
  }
  void add(std::size_t i, const S& v) { set(i, at(i) + v); }

  bool is_zero() const { return entries_.empty(); }

  Vec& operator+=(const Vec& o) {
    check_same(o);
    for (const auto& [i, v] : o.entries_) add(i, v);
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    check_same(o);
    for (const auto& [i, v] : o.entries_) add(i, -v);
    return *this;
  }
  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(const S& s, const Vec& v) {
    Vec out(v.space_);
    for (const auto& [i, x] : v.entries_) out.set(i, s * x);
    return out;
  }

  friend bool operator==(const Vec& a, const Vec& b) { return a.space_ == b.space_ && a.entries_ == b.entries_; }

 private:
  void check_same(const Vec& o) const {
    if (!(space_ == o.space_)) throw SpaceMismatch("Vec: space mismatch");
  }
  Space space_;
  std::map<std::size_t, S> entries_;
};

// ---------------------------------------------------------------------------
// Algebra

template <class S>
void require_same_space(const LinOp<S>& a, const LinOp<S>& b) {
  if (!(a.space() == b.space())) throw SpaceMismatch("LinOp: space mismatch");
}

template <class S>
LinOp<S> operator+(const LinOp<S>& a, const LinOp<S>& b) {
  require_same_space(a, b);
  LinOpBuilder<S> bld(a.space());
  for (std::size_t i = 0; i < a.dim(); ++i) {
    for (const auto& [j, v] : a.row(i)) bld.add(i, j, v);
    for (const auto& [j, v] : b.row(i)) bld.add(i, j, v);
  }
  return std::move(bld).build();
}

template <class S>
LinOp<S> operator-(const LinOp<S>& a, const LinOp<S>& b) {
  return a + (-b);
}

template <class S>
LinOp<S> operator*(const S& s, const LinOp<S>& a) {
  LinOpBuilder<S> bld(a.space());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (const auto& [j, v] : a.row(i)) bld.add(i, j, s * v);
  return std::move(bld).build();
}

/// Composition a * b (apply b first).
template <class S>
LinOp<S> operator*(const LinOp<S>& a, const LinOp<S>& b) {
  require_same_space(a, b);
  LinOpBuilder<S> bld(a.space());
  std::map<std::size_t, S> acc;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    acc.clear();
    for (const auto& [k, av] : a.row(i)) {
      for (const auto& [j, bv] : b.row(k)) {
        auto [it, inserted] = acc.try_emplace(j, av * bv);
        if (!inserted) it->second += av * bv;
      }
    }
    bld.add_row(i, acc);
  }
  return std::move(bld).build();
}

template <class S>
Vec<S> operator*(const LinOp<S>& a, const Vec<S>& v) {
  if (!(a.space() == v.space())) throw SpaceMismatch("apply: space mismatch");
  Vec<S> out(a.space());
  for (std::size_t i = 0; i < a.dim(); ++i) {
    S acc = field_traits<S>::zero();
    bool touched = false;
    for (const auto& [j, av] : a.row(i)) {
      auto it = v.entries().find(j);
      if (it == v.entries().end()) continue;
      acc += av * it->second;
      touched = true;
    }
    if (touched) out.set(i, acc);
  }
  return out;
}

template <class S>
LinOp<S> commutator(const LinOp<S>& a, const LinOp<S>& b) {
  return a * b - b * a;
}

/// g h g^{-1}, with g^{-1} supplied.
template <class S>
LinOp<S> adjoint(const LinOp<S>& g, const LinOp<S>& h, const LinOp<S>& g_inv) {
  return g * h * g_inv;
}

template <class S>
LinOp<S> product(std::span<const LinOp<S>> factors, Space sp) {
  LinOp<S> out = LinOp<S>::identity(sp);
  for (const LinOp<S>& f : factors) out = out * f;
  return out;
}

/// Kronecker product: a acts on the leading sites, b on the trailing ones.
template <class S>
LinOp<S> kron(const LinOp<S>& a, const LinOp<S>& b) {
  if (a.space().N != b.space().N) throw SpaceMismatch("kron: different N");
  Space sp(a.space().n + b.space().n, a.space().N);
  const std::size_t db = b.dim();
  LinOpBuilder<S> bld(sp);
  for (std::size_t ia = 0; ia < a.dim(); ++ia)
    for (const auto& [ja, av] : a.row(ia))
      for (std::size_t ib = 0; ib < db; ++ib)
        for (const auto& [jb, bv] : b.row(ib)) bld.add(ia * db + ib, ja * db + jb, av * bv);
  return std::move(bld).build();
}

/// Embeds a local operator on s sites into `sp`: local slot r acts on site
/// sites[r] (1-based), identity elsewhere.
template <class S>
LinOp<S> embed(const LinOp<S>& local, std::span<const int> sites, Space sp) {
  const Space& ls = local.space();
  if (ls.N != sp.N) throw SpaceMismatch("embed: local N differs from target N");
  if (static_cast<int>(sites.size()) != ls.n) throw SpaceMismatch("embed: site count differs from local arity");
  for (std::size_t r = 0; r < sites.size(); ++r) {
    if (sites[r] < 1 || sites[r] > sp.n) {
      throw std::out_of_range("embed: site " + std::to_string(sites[r]) + " outside 1.." + std::to_string(sp.n));
    }
    for (std::size_t q = 0; q < r; ++q)
      if (sites[q] == sites[r]) throw std::invalid_argument("embed: repeated site");
  }
  const auto d = static_cast<std::size_t>(sp.d());
  std::vector<std::size_t> strides(sites.size());
  for (std::size_t r = 0; r < sites.size(); ++r) strides[r] = sp.stride(sites[r]);

  LinOpBuilder<S> bld(sp);
  for (std::size_t row = 0; row < sp.dim(); ++row) {
    std::size_t local_row = 0;
    std::size_t base = row;
    for (std::size_t r = 0; r < sites.size(); ++r) {
      const std::size_t dig = (row / strides[r]) % d;
      local_row = local_row * d + dig;
      base -= dig * strides[r];
    }
    for (const auto& [lc, v] : local.row(local_row)) {
      std::size_t col = base;
      std::size_t rem = lc;
      for (std::size_t r = sites.size(); r-- > 0;) {
        col += (rem % d) * strides[r];
        rem /= d;
      }
      bld.add(row, col, v);
    }
  }
  return std::move(bld).build();
}

/// u^{(j)}: site operator u acting on the j-th tensor factor.
template <class S>
LinOp<S> embed_site(const LinOp<S>& op, int j, Space sp) {
  if (op.space().n != 1) throw SpaceMismatch("embed_site: operator is not a site operator");
  const int sites[1] = {j};
  return embed(op, std::span<const int>(sites), sp);
}

/// op2^{(i,j)}: first tensor slot on site i, second on site j.
template <class S>
LinOp<S> embed_pair(const LinOp<S>& op2, int i, int j, Space sp) {
  if (op2.space().n != 2) throw SpaceMismatch("embed_pair: operator is not a two-site operator");
  if (i == j) throw std::invalid_argument("embed_pair: sites must differ");
  const int sites[2] = {i, j};
  return embed(op2, std::span<const int>(sites), sp);
}

// ---------------------------------------------------------------------------
// Dense helpers and inversion

template <class S>
using Dense = std::vector<std::vector<S>>;

template <class S>
Dense<S> to_dense(const LinOp<S>& a) {
  Dense<S> m(a.dim(), std::vector<S>(a.dim(), field_traits<S>::zero()));
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (const auto& [j, v] : a.row(i)) m[i][j] = v;
  return m;
}

template <class S>
LinOp<S> from_dense(const Dense<S>& m, Space sp) {
  if (m.size() != sp.dim()) throw SpaceMismatch("from_dense: size mismatch");
  LinOpBuilder<S> bld(sp);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[i].size(); ++j) bld.add(i, j, m[i][j]);
  return std::move(bld).build();
}

template <class S>
double max_abs(const LinOp<S>& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (const auto& e : a.row(i)) m = std::max(m, field_traits<S>::magnitude(e.second));
  return m;
}

template <class S>
double max_abs(const Vec<S>& v) {
  double m = 0.0;
  for (const auto& e : v.entries()) m = std::max(m, field_traits<S>::magnitude(e.second));
  return m;
}

/// Gauss-Jordan inverse. Exact fields pivot on the first nonzero entry;
/// inexact ones use partial pivoting and treat pivots below
/// 1e-12 * max|entry| as singular.
template <class S>
LinOp<S> invert(const LinOp<S>& a) {
  const std::size_t n = a.dim();
  Dense<S> m = to_dense(a);
  Dense<S> inv(n, std::vector<S>(n, field_traits<S>::zero()));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = field_traits<S>::one();
  const double threshold = 1e-12 * max_abs(a);

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = n;
    if constexpr (field_traits<S>::exact) {
      for (std::size_t r = col; r < n; ++r)
        if (!field_traits<S>::is_zero(m[r][col])) {
          piv = r;
          break;
        }
    } else {
      double best = threshold;
      for (std::size_t r = col; r < n; ++r) {
        const double mag = field_traits<S>::magnitude(m[r][col]);
        if (mag > best) {
          best = mag;
          piv = r;
        }
      }
    }
    if (piv == n) throw SingularMatrix("invert: singular matrix (column " + std::to_string(col) + ")");
    std::swap(m[piv], m[col]);
    std::swap(inv[piv], inv[col]);
    const S p = field_traits<S>::one() / m[col][col];
    for (std::size_t j = 0; j < n; ++j) {
      if (!field_traits<S>::is_zero(m[col][j])) m[col][j] = m[col][j] * p;
      if (!field_traits<S>::is_zero(inv[col][j])) inv[col][j] = inv[col][j] * p;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || field_traits<S>::is_zero(m[r][col])) continue;
      const S f = m[r][col];
      for (std::size_t j = 0; j < n; ++j) {
        if (!field_traits<S>::is_zero(m[col][j])) m[r][j] = m[r][j] - f * m[col][j];
        if (!field_traits<S>::is_zero(inv[col][j])) inv[r][j] = inv[r][j] - f * inv[col][j];
      }
    }
  }
  return from_dense(inv, a.space());
}

/// Rank of a set of vectors (rows), by elimination over the field.
template <class S>
std::size_t rank(std::span<const Vec<S>> vecs) {
  if (vecs.empty()) return 0;
  const std::size_t dim = vecs.front().space().dim();
  Dense<S> m;
  for (const Vec<S>& v : vecs) {
    std::vector<S> row(dim, field_traits<S>::zero());
    for (const auto& [i, x] : v.entries()) row[i] = x;
    m.push_back(std::move(row));
  }
  std::size_t r = 0;
  for (std::size_t col = 0; col < dim && r < m.size(); ++col) {
    std::size_t piv = m.size();
    double best = 0.0;
    for (std::size_t i = r; i < m.size(); ++i) {
      if constexpr (field_traits<S>::exact) {
        if (!field_traits<S>::is_zero(m[i][col])) {
          piv = i;
          break;
        }
      } else {
        const double mag = field_traits<S>::magnitude(m[i][col]);
        if (mag > std::max(best, 1e-12)) {
          best = mag;
          piv = i;
        }
      }
    }
    if (piv == m.size()) continue;
    std::swap(m[piv], m[r]);
    for (std::size_t i = r + 1; i < m.size(); ++i) {
      if (field_traits<S>::is_zero(m[i][col])) continue;
      const S f = m[i][col] / m[r][col];
      for (std::size_t j = col; j < dim; ++j) m[i][j] = m[i][j] - f * m[r][j];
    }
    ++r;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Site-level constructors

/// e_{ab} on V: e_{ab} v_p = delta_{bp} v_a.
template <class S>
LinOp<S> matrix_unit(Label a, Label b, int N) {
  Space sp(1, N);
  LinOpBuilder<S> bld(sp);
  bld.add(static_cast<std::size_t>(label_code(a, N)), static_cast<std::size_t>(label_code(b, N)), field_traits<S>::one());
  return std::move(bld).build();
}

/// Transposition P on V (x) V.
template <class S>
LinOp<S> swap_op(int N) {
  Space sp(2, N);
  const auto d = static_cast<std::size_t>(sp.d());
  LinOpBuilder<S> bld(sp);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) bld.add(a * d + b, b * d + a, field_traits<S>::one());
  return std::move(bld).build();
}

/// Exchanges the factors of a two-site operator: P op P.
template <class S>
LinOp<S> swap_slots(const LinOp<S>& op2) {
  const LinOp<S> p = swap_op<S>(op2.space().N);
  return p * op2 * p;
}

template <class S>
std::string to_string(const LinOp<S>& a) {
  std::ostringstream os;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (const auto& [j, v] : a.row(i)) os << "(" << i << "," << j << ")=" << field_traits<S>::to_string(v) << "\n";
  return os.str();
}

}  // namespace bqkz
