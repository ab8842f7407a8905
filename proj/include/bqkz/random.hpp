#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "bqkz/scalar.hpp"

namespace bqkz {

/// Deterministic source of small random rationals: |num| <= max_num,
/// 1 <= den <= max_den. Only the raw mt19937_64 stream is used so the
/// sequence does not depend on the standard library's distributions.
class RationalSampler {
 public:
  explicit RationalSampler(std::uint64_t seed, long max_num = 50, long max_den = 20)
      : eng_(seed), max_num_(max_num), max_den_(max_den) {}

  long uniform_int(long lo, long hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<long>(eng_() % span);
  }

  Rational next() { return Rational(uniform_int(-max_num_, max_num_), uniform_int(1, max_den_)); }

  Rational next_nonzero() {
    for (;;) {
      Rational r = next();
      if (!r.is_zero()) return r;
    }
  }

  double uniform_real(double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(eng_() >> 11) * 0x1.0p-53);
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  long max_num_;
  long max_den_;
};

/// Seed for one sample of one suite; independent of evaluation order.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index) {
  // FNV-1a over the tag, then splitmix64 to mix in base and index.
  std::uint64_t h = 1469598103934665603ull;
  for (char ch : tag) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ull;
  }
  std::uint64_t z = base ^ (h + 0x9e3779b97f4a7c15ull * (index + 1));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace bqkz
