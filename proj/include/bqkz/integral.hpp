#pragma once

// Contour-integral solutions f(lambda|y) = sum_j I(g_j, W) u_j of the boundary
// qKZ system for alpha = beta = k/2 and x = (e^{2 pi i lambda}, 1, ..., 1),
// and the residuals of the difference and differential equations.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bqkz/compat.hpp"
#include "bqkz/rqkz.hpp"
#include "bqkz/scalar.hpp"
#include "bqkz/tensor.hpp"

namespace bqkz {

/// Parameters outside the regime where the horizontal contour separates the
/// pole lattices, or a W violating the degree condition.
struct RegimeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using CVec = std::vector<Complex>;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// W(z) = sum_i coeff_i z^{d_i} / prod_p (1 - z e^{-2 pi i y_p/c})(1 - z e^{2 pi i y_p/c}).
struct CycleW {
  std::vector<int> degrees;
  CVec coeffs;

  static CycleW monomial(int d, Complex coeff = {1.0, 0.0}) { return {{d}, {coeff}}; }
};

struct QuadratureConfig {
  int order = 20;                // Gauss-Legendre nodes per panel
  double panels_per_unit = 4.0;  // initial panel density
  int max_refine = 6;
  double rtol = 1e-12;
  double atol = 1e-300;
  double decay = 1e-17;  // required |integrand(+-T)| / peak
};

struct SolverParams {
  int n = 1;
  int N = 2;
  Complex c{0.0, 0.2};
  Complex k{0.0, 1.0};
  QuadratureConfig quad;

  double delta() const { return k.imag() / 2.0; }
  Complex alpha() const { return k / 2.0; }

  ModelParams<Complex> model() const { return {c, k, alpha(), alpha(), Space(n, N)}; }
};

inline std::string fmt_complex(Complex z) {
  std::ostringstream os;
  os.precision(6);
  os << "(" << z.real() << (z.imag() < 0 ? "" : "+") << z.imag() << "i)";
  return os.str();
}

/// Checks the static regime: Im c > 0, Im k > 0, Im c < Im k / 2, N >= 2 when
/// n >= 2, 2 max|Im y_p| < Im k, and the degree condition for every monomial.
inline void validate_regime(const SolverParams& sp, Complex lambda, const CVec& y, const CycleW& W) {
  if (sp.n < 1) throw RegimeError("n must be positive");
  if (sp.n >= 2 && sp.N < 2) throw RegimeError("N >= 2 is required when n >= 2");
  if (sp.N < 1) throw RegimeError("N must be positive");
  if (static_cast<int>(y.size()) != sp.n) throw RegimeError("y must have n coordinates");
  if (!(sp.c.imag() > 0.0)) throw RegimeError("Im c > 0 is required");
  if (!(sp.k.imag() > 0.0)) throw RegimeError("Im k > 0 is required");
  if (!(sp.c.imag() < sp.k.imag() / 2.0)) throw RegimeError("Im c < Im k / 2 is required for the shifted contour");
  double max_im = 0.0;
  for (Complex v : y) max_im = std::max(max_im, std::abs(v.imag()));
  if (!(2.0 * max_im < sp.k.imag())) throw RegimeError("2 max|Im y_p| < Im k is required");
  if (W.degrees.empty() || W.degrees.size() != W.coeffs.size()) throw RegimeError("W needs matching degrees and coefficients");
  for (int d : W.degrees) {
    const double lo = lambda.real();
    const double hi = lambda.real() + 2.0 * sp.n;
    if (!(lo < d && d < hi)) {
      std::ostringstream os;
      os << "degree condition violated: need Re lambda < d < Re lambda + 2n, got d = " << d << " with Re lambda = " << lo
         << ", n = " << sp.n;
      throw RegimeError(os.str());
    }
  }
}

// ---------------------------------------------------------------------------
// Contour

struct ContourRecord {
  double delta = 0.0;
  int y_points = 0;
  int poles_checked = 0;
  double min_gap_above = 0.0;  // min (Im pole - delta) over the upper lattice
  double min_gap_below = 0.0;  // min (delta - Im pole) over the lower lattice
};

/// Enumerates the poles +-y_p + k + c j (j >= 0, must lie above Im t = delta)
/// and +-y_p + c j (j <= 0, must lie below) with |Re| <= window, for y and
/// every y - c e_m.
inline ContourRecord validate_contour(const SolverParams& sp, const CVec& y, double window) {
  ContourRecord rec;
  rec.delta = sp.delta();
  rec.min_gap_above = rec.min_gap_below = std::numeric_limits<double>::infinity();
  std::vector<CVec> points{y};
  for (int m = 0; m < sp.n; ++m) {
    CVec s = y;
    s[static_cast<std::size_t>(m)] -= sp.c;
    points.push_back(std::move(s));
  }
  for (const CVec& yy : points) {
    ++rec.y_points;
    for (Complex yp : yy) {
      for (Complex base : {yp, -yp}) {
        // Im c > 0: further lattice points only move away from the line.
        for (int j = 0; j <= 64; ++j) {
          const Complex up = base + sp.k + static_cast<double>(j) * sp.c;
          const Complex lo = base - static_cast<double>(j) * sp.c;
          const bool up_in = std::abs(up.real()) <= window;
          const bool lo_in = std::abs(lo.real()) <= window;
          if (up_in) {
            ++rec.poles_checked;
            const double gap = up.imag() - rec.delta;
            if (!(gap > 0.0)) throw RegimeError("contour separation failure: pole " + fmt_complex(up) + " must lie above the contour");
            rec.min_gap_above = std::min(rec.min_gap_above, gap);
          }
          if (lo_in) {
            ++rec.poles_checked;
            const double gap = rec.delta - lo.imag();
            if (!(gap > 0.0)) throw RegimeError("contour separation failure: pole " + fmt_complex(lo) + " must lie below the contour");
            rec.min_gap_below = std::min(rec.min_gap_below, gap);
          }
        }
      }
    }
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Integrand pieces

/// log of the kernel; the branch is irrelevant since only exp() is used.
inline Complex log_kernel(Complex t, const CVec& y, Complex lambda, Complex c, Complex k) {
  Complex acc = -kTwoPi * kI * lambda * t / c;
  for (Complex yp : y) {
    acc += log_gamma((t - yp - k) / (-c)) + log_gamma((t + yp - k) / (-c));
    acc -= log_gamma((t - yp) / (-c)) + log_gamma((t + yp) / (-c));
  }
  return acc;
}

inline Complex kernel_phi(Complex t, const CVec& y, Complex lambda, Complex c, Complex k) {
  return std::exp(log_kernel(t, y, lambda, c, k));
}

namespace detail {

// log(1 - e^X), stable when Re X is large.
inline Complex log1m_exp(Complex X) {
  if (X.real() > 0.0) return X + std::log(std::exp(-X) - 1.0);
  return std::log(1.0 - std::exp(X));
}

}  // namespace detail

inline Complex log_w_denominator(Complex t, const CVec& y, Complex c) {
  Complex acc{0.0, 0.0};
  for (Complex yp : y) {
    acc += detail::log1m_exp(kTwoPi * kI * (t - yp) / c);
    acc += detail::log1m_exp(kTwoPi * kI * (t + yp) / c);
  }
  return acc;
}

/// phi(t|y) W(e^{2 pi i t/c}) evaluated in log space.
inline Complex kernel_times_w(Complex t, const CVec& y, Complex lambda, const CycleW& W, Complex c, Complex k) {
  const Complex base = log_kernel(t, y, lambda, c, k) - log_w_denominator(t, y, c);
  const Complex logz = kTwoPi * kI * t / c;
  Complex acc{0.0, 0.0};
  for (std::size_t i = 0; i < W.degrees.size(); ++i) acc += W.coeffs[i] * std::exp(base + static_cast<double>(W.degrees[i]) * logz);
  return acc;
}

/// g_j(t|y), j = 1..2n.
inline Complex func_g(int j, Complex t, const CVec& y, Complex k) {
  const int n = static_cast<int>(y.size());
  if (j < 1 || j > 2 * n) throw std::out_of_range("func_g: j outside 1..2n");
  auto Y = [&](int p) { return y[static_cast<std::size_t>(p - 1)]; };
  if (j <= n) {
    Complex r = checked_inverse(t - Y(j), "g_j at t = y_j");
    for (int p = 1; p < j; ++p) r *= (t - Y(p) - k) * checked_inverse(t - Y(p), "g_j at t = y_p");
    return r;
  }
  const int jj = 2 * n + 1 - j;
  Complex r = checked_inverse(t + Y(jj), "g_j at t = -y_j");
  for (int p = jj + 1; p <= n; ++p) r *= (t + Y(p) - k) * checked_inverse(t + Y(p), "g_j at t = -y_p");
  for (int p = 1; p <= n; ++p) r *= (t - Y(p) - k) * checked_inverse(t - Y(p), "g_j at t = y_p");
  return r;
}

/// The 2n vectors u_j of V^{(x)n} built from vtilde = (v_2 + v_{2bar})^{(x)(n-1)}.
inline Vec<Complex> default_vtilde(int n, int N) {
  if (n < 2) throw std::invalid_argument("vtilde: only defined for n >= 2");
  if (N < 2) throw std::invalid_argument("vtilde: requires N >= 2");
  const Space sp(n - 1, N);
  Vec<Complex> v(sp);
  const std::size_t count = std::size_t{1} << (n - 1);
  for (std::size_t mask = 0; mask < count; ++mask) {
    std::vector<Label> labels;
    for (int s = 0; s < n - 1; ++s) labels.push_back((mask >> s) & 1u ? labbar(2) : lab(2));
    v.set(linear_index(sp, labels), {1.0, 0.0});
  }
  return v;
}

namespace detail {

// v_l (x) w (front = true) or w (x) v_l.
inline Vec<Complex> attach(Label l, const Vec<Complex>& w, bool front) {
  const Space ws = w.space();
  const Space sp(ws.n + 1, ws.N);
  const auto code = static_cast<std::size_t>(label_code(l, ws.N));
  const auto d = static_cast<std::size_t>(sp.d());
  Vec<Complex> out(sp);
  for (const auto& [i, v] : w.entries()) out.set(front ? code * ws.dim() + i : i * d + code, v);
  return out;
}

}  // namespace detail

inline std::vector<Vec<Complex>> vec_u_all(int n, int N, const Vec<Complex>* vtilde = nullptr) {
  const Space sp(n, N);
  std::vector<Vec<Complex>> u(static_cast<std::size_t>(2 * n), Vec<Complex>(sp));
  if (n == 1) {
    u[0] = Vec<Complex>::basis(sp, static_cast<std::size_t>(label_code(lab(1), N)));
    u[1] = Vec<Complex>::basis(sp, static_cast<std::size_t>(label_code(labbar(1), N)));
    return u;
  }
  const Vec<Complex> vt = vtilde ? *vtilde : default_vtilde(n, N);
  if (!(vt.space() == Space(n - 1, N))) throw SpaceMismatch("vtilde must live in V^{(x)(n-1)}");
  const Vec<Complex> front = detail::attach(lab(1), vt, true);
  const Vec<Complex> back = detail::attach(labbar(1), vt, false);
  const LinOp<Complex> P = swap_op<Complex>(N);
  for (int j = 1; j <= n; ++j) {
    u[static_cast<std::size_t>(j - 1)] = j == 1 ? front : embed_pair(P, 1, j, sp) * front;
    u[static_cast<std::size_t>(2 * n - j)] = j == n ? back : embed_pair(P, j, n, sp) * back;
  }
  return u;
}

inline Vec<Complex> vec_u(int j, int n, int N) {
  if (j < 1 || j > 2 * n) throw std::out_of_range("vec_u: j outside 1..2n");
  return vec_u_all(n, N)[static_cast<std::size_t>(j - 1)];
}

/// gtilde(t|y) = sum_j g_j(t|y) u_j.
inline Vec<Complex> g_tilde(Complex t, const CVec& y, Complex k, int N) {
  const int n = static_cast<int>(y.size());
  const auto u = vec_u_all(n, N);
  Vec<Complex> out(Space(n, N));
  for (int j = 1; j <= 2 * n; ++j) out += func_g(j, t, y, k) * u[static_cast<std::size_t>(j - 1)];
  return out;
}

// ---------------------------------------------------------------------------
// Quadrature

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
inline void gauss_legendre(int order, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(static_cast<std::size_t>(order), 0.0);
  weights.assign(static_cast<std::size_t>(order), 0.0);
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = z;
      for (int l = 2; l <= order; ++l) {
        const double p2 = ((2.0 * l - 1.0) * z * p1 - (l - 1.0) * p0) / l;
        p0 = p1;
        p1 = p2;
      }
      if (order == 1) {
        p1 = z;
        p0 = 1.0;
      }
      dp = order * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    nodes[static_cast<std::size_t>(i)] = -z;
    nodes[static_cast<std::size_t>(order - 1 - i)] = z;
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    weights[static_cast<std::size_t>(i)] = w;
    weights[static_cast<std::size_t>(order - 1 - i)] = w;
  }
}

using VectorIntegrand = std::function<CVec(Complex)>;

/// Composite Gauss-Legendre over t = s + i delta, s in [-T, T], with
/// `panels` equal panels; panels are summed left to right.
inline CVec integrate_line(const VectorIntegrand& f, std::size_t width, double delta, double T, int panels, int order) {
  std::vector<double> x;
  std::vector<double> w;
  gauss_legendre(order, x, w);
  CVec total(width, Complex{0.0, 0.0});
  const double h = 2.0 * T / panels;
  for (int p = 0; p < panels; ++p) {
    const double a = -T + p * h;
    const double mid = a + h / 2.0;
    CVec part(width, Complex{0.0, 0.0});
    for (std::size_t q = 0; q < x.size(); ++q) {
      const CVec v = f(Complex{mid + (h / 2.0) * x[q], delta});
      for (std::size_t c = 0; c < width; ++c) part[c] += w[q] * v[c];
    }
    for (std::size_t c = 0; c < width; ++c) total[c] += (h / 2.0) * part[c];
  }
  return total;
}

inline double max_norm(const CVec& v) {
  double m = 0.0;
  for (Complex z : v) m = std::max(m, std::abs(z));
  return m;
}

struct QuadDiagnostics {
  double T = 0.0;
  int panels = 0;
  int refinements = 0;
  double error_estimate = 0.0;
  double endpoint_ratio = 0.0;  // |integrand(+-T)| / peak
};

/// Initial truncation from the exponential decay rate, then widened until the
/// integrand at both ends is below `decay` times its sampled peak.
inline double choose_truncation(const VectorIntegrand& f, double delta, double rate, double margin, double center,
                                const QuadratureConfig& qc, double& endpoint_ratio) {
  double T = center + (-std::log(qc.decay) + 5.0) / std::max(rate * margin, 1e-3);
  T = std::max(T, center + 4.0);
  for (int it = 0; it < 40; ++it) {
    double peak = 0.0;
    const int samples = std::max(200, static_cast<int>(40.0 * T));
    for (int s = 0; s <= samples; ++s) peak = std::max(peak, max_norm(f(Complex{-T + 2.0 * T * s / samples, delta})));
    const double ends = std::max(max_norm(f(Complex{-T, delta})), max_norm(f(Complex{T, delta})));
    endpoint_ratio = peak > 0.0 ? ends / peak : 0.0;
    if (endpoint_ratio <= qc.decay) return T;
    T *= 1.5;
  }
  throw QuadratureError("integrand does not decay along the contour");
}

/// Integral with successive doubling of T and panel density until two
/// estimates agree to rtol.
inline CVec integrate_converged(const VectorIntegrand& f, std::size_t width, double delta, double T0,
                                const QuadratureConfig& qc, QuadDiagnostics& diag) {
  double T = T0;
  int panels = std::max(4, static_cast<int>(std::ceil(2.0 * T * qc.panels_per_unit)));
  CVec prev = integrate_line(f, width, delta, T, panels, qc.order);
  for (int r = 1; r <= qc.max_refine; ++r) {
    T *= 2.0;
    panels *= 4;
    CVec cur = integrate_line(f, width, delta, T, panels, qc.order);
    double diff = 0.0;
    for (std::size_t c = 0; c < width; ++c) diff = std::max(diff, std::abs(cur[c] - prev[c]));
    const double scale = max_norm(cur);
    diag.T = T;
    diag.panels = panels;
    diag.refinements = r;
    diag.error_estimate = diff;
    if (diff <= qc.rtol * scale + qc.atol) return cur;
    prev = std::move(cur);
  }
  std::ostringstream os;
  os.precision(17);
  os << "quadrature did not converge after " << qc.max_refine << " refinements; last change " << diag.error_estimate
     << ", last estimate magnitude " << max_norm(prev);
  throw QuadratureError(os.str());
}

/// Adaptive Simpson on the same horizontal line; an independent check of
/// the Gauss-Legendre result.
inline CVec integrate_simpson(const VectorIntegrand& f, std::size_t width, double delta, double T, double tol,
                              int max_depth = 40) {
  struct Seg {
    double a, b;
    CVec fa, fm, fb, whole;
    double eps;
    int depth;
  };
  auto eval = [&](double s) { return f(Complex{s, delta}); };
  auto simpson = [&](double a, double b, const CVec& fa, const CVec& fm, const CVec& fb) {
    CVec out(width);
    for (std::size_t c = 0; c < width; ++c) out[c] = (b - a) / 6.0 * (fa[c] + 4.0 * fm[c] + fb[c]);
    return out;
  };
  CVec total(width, Complex{0.0, 0.0});
  // Start from a uniform grid so narrow features are not skipped.
  const int initial = std::max(16, static_cast<int>(8.0 * T));
  std::vector<Seg> stack;
  for (int i = initial - 1; i >= 0; --i) {
    const double a = -T + 2.0 * T * i / initial;
    const double b = -T + 2.0 * T * (i + 1) / initial;
    CVec fa = eval(a);
    CVec fb = eval(b);
    CVec fm = eval((a + b) / 2.0);
    CVec whole = simpson(a, b, fa, fm, fb);
    stack.push_back({a, b, std::move(fa), std::move(fm), std::move(fb), std::move(whole), tol / initial, 0});
  }
  while (!stack.empty()) {
    Seg s = std::move(stack.back());
    stack.pop_back();
    const double m = (s.a + s.b) / 2.0;
    const CVec flm = eval((s.a + m) / 2.0);
    const CVec frm = eval((m + s.b) / 2.0);
    const CVec left = simpson(s.a, m, s.fa, flm, s.fm);
    const CVec right = simpson(m, s.b, s.fm, frm, s.fb);
    double err = 0.0;
    for (std::size_t c = 0; c < width; ++c) err = std::max(err, std::abs(left[c] + right[c] - s.whole[c]));
    if (err <= 15.0 * s.eps || s.depth >= max_depth) {
      for (std::size_t c = 0; c < width; ++c) total[c] += left[c] + right[c] + (left[c] + right[c] - s.whole[c]) / 15.0;
      continue;
    }
    stack.push_back({m, s.b, s.fm, frm, s.fb, right, s.eps / 2.0, s.depth + 1});
    stack.push_back({s.a, m, s.fa, flm, s.fm, left, s.eps / 2.0, s.depth + 1});
  }
  return total;
}

// ---------------------------------------------------------------------------
// Pairings and the solution

/// The integrand vector (phi g_j W)_{j=1..2n} followed by its lambda
/// derivatives (-2 pi i t/c) phi g_j W.
inline VectorIntegrand pairing_integrand(const SolverParams& sp, Complex lambda, const CVec& y, const CycleW& W) {
  return [=](Complex t) {
    const Complex base = kernel_times_w(t, y, lambda, W, sp.c, sp.k);
    const Complex dfac = -kTwoPi * kI * t / sp.c;
    const int n = sp.n;
    CVec out(static_cast<std::size_t>(4 * n));
    for (int j = 1; j <= 2 * n; ++j) {
      const Complex v = base * func_g(j, t, y, sp.k);
      out[static_cast<std::size_t>(j - 1)] = v;
      out[static_cast<std::size_t>(2 * n + j - 1)] = dfac * v;
    }
    return out;
  };
}

struct PairingResult {
  CVec values;   // I(g_j, W)
  CVec dvalues;  // d/dlambda I(g_j, W)
  QuadDiagnostics diag;
  ContourRecord contour;
};

inline double decay_margin(Complex lambda, int n, const CycleW& W) {
  double margin = std::numeric_limits<double>::infinity();
  for (int d : W.degrees) margin = std::min({margin, d - lambda.real(), lambda.real() + 2.0 * n - d});
  return margin;
}

inline PairingResult pair_all(const SolverParams& sp, Complex lambda, const CVec& y, const CycleW& W) {
  validate_regime(sp, lambda, y, W);
  const VectorIntegrand f = pairing_integrand(sp, lambda, y, W);
  double center = 0.0;
  for (Complex v : y) center = std::max(center, std::abs(v.real()));
  const double rate = (kTwoPi * kI / sp.c).real();
  PairingResult res;
  const double T0 = choose_truncation(f, sp.delta(), rate, decay_margin(lambda, sp.n, W), center, sp.quad,
                                      res.diag.endpoint_ratio);
  res.contour = validate_contour(sp, y, 4.0 * T0 + center);
  const CVec all = integrate_converged(f, static_cast<std::size_t>(4 * sp.n), sp.delta(), T0, sp.quad, res.diag);
  res.values.assign(all.begin(), all.begin() + 2 * sp.n);
  res.dvalues.assign(all.begin() + 2 * sp.n, all.end());
  return res;
}

inline Complex pair_I(int j, const SolverParams& sp, Complex lambda, const CVec& y, const CycleW& W) {
  if (j < 1 || j > 2 * sp.n) throw std::out_of_range("pair_I: j outside 1..2n");
  return pair_all(sp, lambda, y, W).values[static_cast<std::size_t>(j - 1)];
}

struct SolutionVector {
  Complex lambda;
  CVec y;
  CycleW W;
  CVec coeffs;   // I(g_j, W), j = 1..2n
  CVec dcoeffs;  // lambda derivatives
  Vec<Complex> f;
  Vec<Complex> df;
  QuadDiagnostics diag;
  ContourRecord contour;
};

inline Vec<Complex> combine(const CVec& coeffs, const std::vector<Vec<Complex>>& u, Space sp) {
  Vec<Complex> out(sp);
  for (std::size_t j = 0; j < coeffs.size(); ++j) out += coeffs[j] * u[j];
  return out;
}

inline SolutionVector solve_f(Complex lambda, const CVec& y, const CycleW& W, const SolverParams& sp) {
  PairingResult pr = pair_all(sp, lambda, y, W);
  const auto u = vec_u_all(sp.n, sp.N);
  const Space space(sp.n, sp.N);
  SolutionVector s{lambda, y, W, pr.values, pr.dvalues, combine(pr.values, u, space), combine(pr.dvalues, u, space),
                   pr.diag, pr.contour};
  return s;
}

// ---------------------------------------------------------------------------
// Residuals

inline XPoint<Complex> solver_x(Complex lambda, int N) {
  XPoint<Complex> x(static_cast<std::size_t>(N), Complex{1.0, 0.0});
  x[0] = std::exp(kTwoPi * kI * lambda);
  return x;
}

struct ResidualReport {
  std::vector<double> qkz;  // per m
  double qkz_max = 0.0;
  double ode = 0.0;
  double ode_tilde = 0.0;
  SolutionVector solution;
  std::vector<SolutionVector> shifted;
};

/// max|f(y - c e_m) - Q_m(x|y) f(y)| / max|f(y)|.
inline double qkz_residual(const SolutionVector& base, const SolutionVector& shifted, int m, const SolverParams& sp) {
  const ModelParams<Complex> mp = sp.model();
  const XPoint<Complex> x = solver_x(base.lambda, sp.N);
  const Vec<Complex> qf = op_Q(m, x, base.y, mp) * base.f;
  return max_abs(shifted.f - qf) / max_abs(base.f);
}

/// D_1 f = (c/2 pi i) df/dlambda + L_1(x|y) f, compared with -k x_1/(x_1 - 1) f.
inline Vec<Complex> apply_D1(const SolutionVector& s, const SolverParams& sp) {
  const ModelParams<Complex> mp = sp.model();
  const XPoint<Complex> x = solver_x(s.lambda, sp.N);
  return (sp.c / (kTwoPi * kI)) * s.df + op_L(1, x, s.y, mp) * s.f;
}

inline double ode_residual(const SolutionVector& s, const SolverParams& sp) {
  const Complex x1 = std::exp(kTwoPi * kI * s.lambda);
  const Complex rhs = -sp.k * x1 / (x1 - 1.0);
  return max_abs(apply_D1(s, sp) - rhs * s.f) / max_abs(s.f);
}

/// max|D_1 ftilde| / max|ftilde| for ftilde = (x_1 - 1)^{k/c} f.
inline double ode_tilde_residual(const SolutionVector& s, const SolverParams& sp) {
  const ModelParams<Complex> mp = sp.model();
  const XPoint<Complex> x = solver_x(s.lambda, sp.N);
  const Complex x1 = x[0];
  const Complex pw = complex_pow(x1 - 1.0, sp.k / sp.c);
  const Complex dpw = (sp.k / sp.c) * pw / (x1 - 1.0) * (kTwoPi * kI * x1);
  const Vec<Complex> ft = pw * s.f;
  const Vec<Complex> dft = dpw * s.f + pw * s.df;
  const Vec<Complex> d1 = (sp.c / (kTwoPi * kI)) * dft + op_L(1, x, s.y, mp) * ft;
  return max_abs(d1) / max_abs(ft);
}

inline ResidualReport residual_report(Complex lambda, const CVec& y, const CycleW& W, const SolverParams& sp) {
  ResidualReport r;
  r.solution = solve_f(lambda, y, W, sp);
  for (int m = 1; m <= sp.n; ++m) {
    CVec ys = y;
    ys[static_cast<std::size_t>(m - 1)] -= sp.c;
    r.shifted.push_back(solve_f(lambda, ys, W, sp));
    const double q = qkz_residual(r.solution, r.shifted.back(), m, sp);
    r.qkz.push_back(q);
    r.qkz_max = std::max(r.qkz_max, q);
  }
  r.ode = ode_residual(r.solution, sp);
  r.ode_tilde = ode_tilde_residual(r.solution, sp);
  return r;
}

/// The integral of phi (1 - e^{2 pi i lambda} prod_l ...) W over the contour;
/// it vanishes for every admissible W.
inline Complex vanishing_integral(Complex lambda, const CVec& y, const CycleW& W, const SolverParams& sp,
                                  double* scale = nullptr) {
  validate_regime(sp, lambda, y, W);
  const Complex x1 = std::exp(kTwoPi * kI * lambda);
  const VectorIntegrand f = [=](Complex t) {
    Complex prod = x1;
    for (Complex yl : y) prod *= (t - yl - sp.k) / (t - yl) * (t + yl - sp.k) / (t + yl);
    const Complex base = kernel_times_w(t, y, lambda, W, sp.c, sp.k);
    return CVec{base * (1.0 - prod), base};
  };
  double center = 0.0;
  for (Complex v : y) center = std::max(center, std::abs(v.real()));
  double ratio = 0.0;
  const double T0 = choose_truncation(f, sp.delta(), (kTwoPi * kI / sp.c).real(), decay_margin(lambda, sp.n, W), center,
                                      sp.quad, ratio);
  QuadDiagnostics diag;
  QuadratureConfig qc = sp.quad;
  qc.atol = std::max(qc.atol, 1e-300);
  const CVec v = integrate_converged(f, 2, sp.delta(), T0, qc, diag);
  if (scale) *scale = std::abs(v[1]);
  return v[0];
}

}  // namespace bqkz
