#pragma once

// Scalar fields used throughout the library: exact rationals (GMP backed)
// and double precision complex numbers, plus the complex special functions
// needed by the integral solver.

#include <gmpxx.h>

#include <array>
#include <cmath>
#include <complex>
#include <concepts>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

namespace bqkz {

struct DivisionByZero : std::domain_error {
  using std::domain_error::domain_error;
};

// A denominator of some operator coefficient vanished.
struct PoleError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Exact rational number, always kept in canonical form
/// (reduced, positive denominator, zero is 0/1).
class Rational {
 public:
  Rational() = default;

  template <std::integral I>
  Rational(I v) : q_(static_cast<long>(v)) {}  // NOLINT(google-explicit-constructor)

  Rational(long num, long den) {
    if (den == 0) throw DivisionByZero("Rational: zero denominator");
    q_ = mpq_class(num, 1) / mpq_class(den, 1);
    q_.canonicalize();
  }

  explicit Rational(mpq_class q) : q_(std::move(q)) { q_.canonicalize(); }

  /// Parses "p/q" or "p".
  static Rational parse(const std::string& s) {
    mpq_class q;
    if (q.set_str(s, 10) != 0) throw std::invalid_argument("Rational: cannot parse '" + s + "'");
    if (q.get_den() == 0) throw DivisionByZero("Rational: zero denominator in '" + s + "'");
    return Rational(std::move(q));
  }

  const mpq_class& get() const { return q_; }
  mpz_class num() const { return q_.get_num(); }
  mpz_class den() const { return q_.get_den(); }

  bool is_zero() const { return sgn(q_) == 0; }
  int sign() const { return sgn(q_); }
  double to_double() const { return q_.get_d(); }
  std::string str() const { return q_.get_str(); }

  Rational operator-() const { return Rational(mpq_class(-q_)); }

  Rational& operator+=(const Rational& o) {
    q_ += o.q_;
    return *this;
  }
  Rational& operator-=(const Rational& o) {
    q_ -= o.q_;
    return *this;
  }
  Rational& operator*=(const Rational& o) {
    q_ *= o.q_;
    return *this;
  }
  Rational& operator/=(const Rational& o) {
    if (o.is_zero()) throw DivisionByZero("Rational: division by zero");
    q_ /= o.q_;
    return *this;
  }

  friend Rational operator+(Rational a, const Rational& b) { return a += b; }
  friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
  friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
  friend Rational operator/(Rational a, const Rational& b) { return a /= b; }

  friend bool operator==(const Rational& a, const Rational& b) { return a.q_ == b.q_; }
  friend bool operator<(const Rational& a, const Rational& b) { return a.q_ < b.q_; }
  friend bool operator>(const Rational& a, const Rational& b) { return a.q_ > b.q_; }

  friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

 private:
  mpq_class q_{0};
};

using Complex = std::complex<double>;

/// Uniform access to the operations the generic code needs from a field.
/// `exact` fields get structural equality; inexact ones only compare through
/// explicit tolerances.
template <class S>
struct field_traits;

template <>
struct field_traits<Rational> {
  static constexpr bool exact = true;
  static Rational zero() { return Rational(0); }
  static Rational one() { return Rational(1); }
  static Rational from_integer(long v) { return Rational(v); }
  static bool is_zero(const Rational& v) { return v.is_zero(); }
  static bool is_singular(const Rational& v) { return v.is_zero(); }
  static double magnitude(const Rational& v) { return std::abs(v.to_double()); }
  static std::string to_string(const Rational& v) { return v.str(); }
};

template <>
struct field_traits<Complex> {
  static constexpr bool exact = false;
  // Denominators below this magnitude are treated as poles.
  static constexpr double pole_threshold = 1e-13;
  static Complex zero() { return {0.0, 0.0}; }
  static Complex one() { return {1.0, 0.0}; }
  static Complex from_integer(long v) { return {static_cast<double>(v), 0.0}; }
  static bool is_zero(const Complex& v) { return v.real() == 0.0 && v.imag() == 0.0; }
  static bool is_singular(const Complex& v) { return std::abs(v) <= pole_threshold; }
  static double magnitude(const Complex& v) { return std::abs(v); }
  static std::string to_string(const Complex& v) {
    return "(" + std::to_string(v.real()) + "," + std::to_string(v.imag()) + ")";
  }
};

template <class S>
concept Field = requires(const S& a, const S& b) {
  { a + b } -> std::convertible_to<S>;
  { a - b } -> std::convertible_to<S>;
  { a * b } -> std::convertible_to<S>;
  { a / b } -> std::convertible_to<S>;
  { -a } -> std::convertible_to<S>;
  { field_traits<S>::is_zero(a) } -> std::convertible_to<bool>;
};

/// 1/den, or PoleError naming `what` when den vanishes.
template <class S>
S checked_inverse(const S& den, const char* what) {
  if (field_traits<S>::is_singular(den)) throw PoleError(std::string("pole: ") + what);
  return field_traits<S>::one() / den;
}

template <class S>
S checked_div(const S& num, const S& den, const char* what) {
  return num * checked_inverse(den, what);
}

// ---------------------------------------------------------------------------
// Complex special functions

namespace detail {

// B_{2k} / (2k (2k-1)), k = 1..10
inline constexpr std::array<double, 10> kStirlingCoeffs = {
    1.0 / 12.0,           -1.0 / 360.0,           1.0 / 1260.0,   -1.0 / 1680.0,
    1.0 / 1188.0,         -691.0 / 360360.0,      1.0 / 156.0,    -3617.0 / 122400.0,
    43867.0 / 244188.0,   -174611.0 / 125400.0,
};

inline constexpr double kStirlingShift = 15.0;

// log Gamma for Re z >= 1/2: shift up by the recurrence, then Stirling.
// Every z + j stays in the right half plane, so the sum of principal logs is
// the analytic continuation from the positive axis.
inline Complex log_gamma_right(Complex z) {
  Complex shift_sum{0.0, 0.0};
  while (z.real() < kStirlingShift) {
    shift_sum += std::log(z);
    z += 1.0;
  }
  const Complex inv = 1.0 / z;
  const Complex inv2 = inv * inv;
  Complex series{0.0, 0.0};
  Complex power = inv;
  for (double c : kStirlingCoeffs) {
    series += c * power;
    power *= inv2;
  }
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  return (z - 0.5) * std::log(z) - z + half_log_2pi + series - shift_sum;
}

// log sin(pi z) on the branch continuous from z = 1/2 within each half plane.
inline Complex log_sin_pi(Complex z) {
  const double pi = std::numbers::pi;
  const Complex i{0.0, 1.0};
  if (z.imag() >= 0.0) {
    return -std::log(2.0) + i * (pi / 2.0) - i * pi * z + std::log(1.0 - std::exp(2.0 * i * pi * z));
  }
  return -std::log(2.0) - i * (pi / 2.0) + i * pi * z + std::log(1.0 - std::exp(-2.0 * i * pi * z));
}

}  // namespace detail

/// Principal branch of log Gamma (analytic continuation from the positive
/// real axis to the plane cut along (-inf, 0]). The reflection formula
/// handles Re z < 1/2.
inline Complex log_gamma(Complex z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw std::domain_error("log_gamma: non-finite argument");
  if (z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::floor(z.real()))
    throw PoleError("log_gamma: pole of Gamma at nonpositive integer");
  if (z.real() >= 0.5) return detail::log_gamma_right(z);
  return std::log(std::numbers::pi) - detail::log_sin_pi(z) - detail::log_gamma_right(1.0 - z);
}

/// w^s = exp(s Log w) with the principal Log.
inline Complex complex_pow(Complex w, Complex s) {
  if (w == Complex{0.0, 0.0}) throw DivisionByZero("complex_pow: zero base");
  return std::exp(s * std::log(w));
}

}  // namespace bqkz
