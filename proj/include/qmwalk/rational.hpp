#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <string>

#include "qmwalk/errors.hpp"

namespace qmwalk {

// Exact rational with 64-bit numerator/denominator. Arithmetic is
// overflow-checked (128-bit intermediates); overflow raises CapacityError
// so callers can fall back to floating mode.
class Rational {
 public:
  Rational() = default;
  Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) { normalize(); }
  static Rational integer(std::int64_t n) { return Rational(n, 1); }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  bool is_zero() const { return num_ == 0; }

  Rational operator+(const Rational& o) const {
    return from128(w(num_) * o.den_ + w(o.num_) * den_, w(den_) * o.den_);
  }
  Rational operator-(const Rational& o) const {
    return from128(w(num_) * o.den_ - w(o.num_) * den_, w(den_) * o.den_);
  }
  Rational operator*(const Rational& o) const {
    return from128(w(num_) * o.num_, w(den_) * o.den_);
  }
  Rational operator/(const Rational& o) const {
    if (o.num_ == 0) throw ConfigError("rational division by zero");
    return from128(w(num_) * o.den_, w(den_) * o.num_);
  }
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }

  bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
  bool operator!=(const Rational& o) const { return !(*this == o); }
  bool operator<(const Rational& o) const { return w(num_) * o.den_ < w(o.num_) * den_; }

  // Accepts "p/q", integers, and plain decimals ("0.25" -> 1/4).
  static std::optional<Rational> parse(const std::string& text);

  std::string str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

 private:
  using i128 = __int128;
  static i128 w(std::int64_t x) { return static_cast<i128>(x); }

  static Rational from128(i128 num, i128 den) {
    if (den == 0) throw ConfigError("rational with zero denominator");
    if (den < 0) { num = -num; den = -den; }
    i128 g = gcd128(num < 0 ? -num : num, den);
    if (g > 1) { num /= g; den /= g; }
    constexpr i128 lim = INT64_MAX;
    if (num > lim || num < -lim || den > lim)
      throw CapacityError("rational overflow; rerun in floating mode");
    Rational r;
    r.num_ = static_cast<std::int64_t>(num);
    r.den_ = static_cast<std::int64_t>(den);
    return r;
  }

  static i128 gcd128(i128 a, i128 b) {
    while (b != 0) { i128 t = a % b; a = b; b = t; }
    return a < 0 ? -a : a;
  }

  void normalize() {
    *this = from128(w(num_), w(den_));
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

inline std::optional<Rational> Rational::parse(const std::string& text) {
  if (text.empty()) return std::nullopt;
  auto slash = text.find('/');
  try {
    if (slash != std::string::npos) {
      std::int64_t p = std::stoll(text.substr(0, slash));
      std::int64_t q = std::stoll(text.substr(slash + 1));
      if (q == 0) return std::nullopt;
      return Rational(p, q);
    }
    auto dot = text.find('.');
    if (dot == std::string::npos) return Rational::integer(std::stoll(text));
    std::string digits = text.substr(0, dot) + text.substr(dot + 1);
    std::size_t frac_len = text.size() - dot - 1;
    if (frac_len == 0 || frac_len > 17) return std::nullopt;
    std::int64_t num = std::stoll(digits);
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac_len; ++i) {
      if (den > INT64_MAX / 10) return std::nullopt;
      den *= 10;
    }
    return Rational(num, den);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace qmwalk
