#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include "rugsim/core/error.hpp"

namespace rugsim {

using int128 = __int128;
using uint128 = unsigned __int128;
using wide_int = boost::multiprecision::int256_t;

enum class rounding { half_even, floor, ceil, toward_zero };

namespace detail {

inline constexpr int128 kInt128Max = static_cast<int128>(~uint128{0} >> 1);
inline constexpr int128 kInt128Min = -kInt128Max - 1;

inline wide_int to_wide(int128 v) {
  const bool neg = v < 0;
  const uint128 mag = neg ? uint128{0} - static_cast<uint128>(v) : static_cast<uint128>(v);
  wide_int w = static_cast<std::uint64_t>(mag >> 64);
  w <<= 64;
  w += static_cast<std::uint64_t>(mag);
  return neg ? wide_int(-w) : w;
}

inline int128 from_wide(const wide_int& w) {
  static const wide_int max = to_wide(kInt128Max);
  static const wide_int min = to_wide(kInt128Min);
  if (w > max || w < min) fail(errc::range, "fixed-point overflow");
  const bool neg = w < 0;
  const wide_int mag = neg ? wide_int(-w) : w;
  const auto lo = static_cast<std::uint64_t>(mag & wide_int(std::numeric_limits<std::uint64_t>::max()));
  const auto hi = static_cast<std::uint64_t>(mag >> 64);
  const uint128 m = (static_cast<uint128>(hi) << 64) | lo;
  return neg ? static_cast<int128>(uint128{0} - m) : static_cast<int128>(m);
}

// Integer division num/den with the requested rounding. Works for both the
// builtin 128-bit type and the 256-bit multiprecision type.
template <class I>
I div_round(I num, I den, rounding mode) {
  if (den == 0) fail(errc::domain, "division by zero");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  I q = num / den;
  I r = num % den;
  if (r == 0) return q;
  switch (mode) {
    case rounding::toward_zero:
      return q;
    case rounding::floor:
      return num < 0 ? I(q - 1) : q;
    case rounding::ceil:
      return num > 0 ? I(q + 1) : q;
    case rounding::half_even: {
      const I twice = (r < 0 ? I(-r) : r) * 2;
      if (twice > den || (twice == den && q % 2 != 0)) q += (num < 0 ? -1 : 1);
      return q;
    }
  }
  return q;
}

inline std::string int128_to_string(int128 v) {
  if (v == 0) return "0";
  const bool neg = v < 0;
  uint128 mag = neg ? uint128{0} - static_cast<uint128>(v) : static_cast<uint128>(v);
  std::string out;
  while (mag != 0) {
    out.push_back(static_cast<char>('0' + static_cast<int>(mag % 10)));
    mag /= 10;
  }
  if (neg) out.push_back('-');
  return {out.rbegin(), out.rend()};
}

inline constexpr int128 abs128(int128 v) { return v < 0 ? -v : v; }

}  // namespace detail

/// Signed decimal fixed-point quantity with nine fractional digits.
///
/// The raw representation is a 128-bit count of 1e-9 units, which covers
/// well beyond +/-1e18 whole units. Addition and subtraction are exact and
/// throw `errc::range` on overflow. Multiplication and division round half
/// to even; intermediate products are carried in 256 bits when the 128-bit
/// fast path could overflow.
class Fixed {
 public:
  static constexpr int kDecimals = 9;
  static constexpr int128 kScale = 1'000'000'000;

  constexpr Fixed() noexcept = default;

  static constexpr Fixed from_raw(int128 raw) noexcept {
    Fixed f;
    f.raw_ = raw;
    return f;
  }
  static constexpr Fixed quantum() noexcept { return from_raw(1); }
  static constexpr Fixed from_int(std::int64_t whole) noexcept { return from_raw(int128{whole} * kScale); }
  /// Basis points as a fraction: 30 -> 0.003.
  static constexpr Fixed from_bps(std::int64_t bps) noexcept { return from_raw(int128{bps} * (kScale / 10'000)); }

  /// Exact decimal parse (optional sign, fraction and exponent). Digits
  /// beyond the ninth decimal are rounded half to even.
  static Fixed parse(std::string_view text);

  /// Nearest representable value, ties to even.
  static Fixed from_long_double(long double v) {
    if (!std::isfinite(v)) fail(errc::domain, "non-finite value");
    const long double scaled = std::nearbyint(v * 1e9L);
    if (scaled >= 1.7e38L || scaled <= -1.7e38L) fail(errc::range, "fixed-point overflow");
    return from_raw(static_cast<int128>(scaled));
  }

  constexpr int128 raw() const noexcept { return raw_; }
  long double to_long_double() const noexcept { return static_cast<long double>(raw_) / 1e9L; }
  double to_double() const noexcept { return static_cast<double>(to_long_double()); }

  /// Canonical text: no exponent, trailing fractional zeros trimmed.
  std::string str() const {
    const bool neg = raw_ < 0;
    const int128 mag = detail::abs128(raw_);
    std::string s = detail::int128_to_string(mag / kScale);
    int128 frac = mag % kScale;
    if (frac != 0) {
      std::string digits = detail::int128_to_string(frac);
      digits.insert(0, static_cast<std::size_t>(kDecimals) - digits.size(), '0');
      while (!digits.empty() && digits.back() == '0') digits.pop_back();
      s += '.';
      s += digits;
    }
    return neg ? "-" + s : s;
  }

  constexpr bool is_zero() const noexcept { return raw_ == 0; }
  constexpr bool is_positive() const noexcept { return raw_ > 0; }
  constexpr bool is_negative() const noexcept { return raw_ < 0; }

  friend constexpr bool operator==(Fixed a, Fixed b) noexcept { return a.raw_ == b.raw_; }
  friend constexpr std::strong_ordering operator<=>(Fixed a, Fixed b) noexcept { return a.raw_ <=> b.raw_; }

  friend Fixed operator+(Fixed a, Fixed b) {
    int128 r;
    if (__builtin_add_overflow(a.raw_, b.raw_, &r)) fail(errc::range, "fixed-point overflow in addition");
    return from_raw(r);
  }
  friend Fixed operator-(Fixed a, Fixed b) {
    int128 r;
    if (__builtin_sub_overflow(a.raw_, b.raw_, &r)) fail(errc::range, "fixed-point overflow in subtraction");
    return from_raw(r);
  }
  Fixed operator-() const {
    if (raw_ == detail::kInt128Min) fail(errc::range, "fixed-point overflow in negation");
    return from_raw(-raw_);
  }
  friend Fixed operator*(Fixed a, Fixed b) { return mul(a, b, rounding::half_even); }
  friend Fixed operator/(Fixed a, Fixed b) { return div(a, b, rounding::half_even); }
  friend Fixed operator*(Fixed a, std::int64_t n) {
    int128 r;
    if (__builtin_mul_overflow(a.raw_, int128{n}, &r)) fail(errc::range, "fixed-point overflow in scaling");
    return from_raw(r);
  }
  Fixed& operator+=(Fixed o) { return *this = *this + o; }
  Fixed& operator-=(Fixed o) { return *this = *this - o; }

  static Fixed mul(Fixed a, Fixed b, rounding mode) {
    constexpr int128 kFast = int128{1} << 62;
    if (detail::abs128(a.raw_) < kFast && detail::abs128(b.raw_) < kFast)
      return from_raw(detail::div_round<int128>(a.raw_ * b.raw_, kScale, mode));
    return from_raw(detail::from_wide(
        detail::div_round<wide_int>(detail::to_wide(a.raw_) * detail::to_wide(b.raw_), wide_int(1'000'000'000), mode)));
  }

  static Fixed div(Fixed a, Fixed b, rounding mode) {
    if (b.raw_ == 0) fail(errc::domain, "division by zero");
    constexpr int128 kFast = int128{1} << 96;
    if (detail::abs128(a.raw_) < kFast) return from_raw(detail::div_round<int128>(a.raw_ * kScale, b.raw_, mode));
    return from_raw(detail::from_wide(
        detail::div_round<wide_int>(detail::to_wide(a.raw_) * wide_int(1'000'000'000), detail::to_wide(b.raw_), mode)));
  }

 private:
  int128 raw_ = 0;
};

inline Fixed abs(Fixed v) { return v.is_negative() ? -v : v; }
inline Fixed min(Fixed a, Fixed b) { return b < a ? b : a; }
inline Fixed max(Fixed a, Fixed b) { return a < b ? b : a; }

/// a*b/c evaluated exactly, rounded once.
inline Fixed mul_div(Fixed a, Fixed b, Fixed c, rounding mode = rounding::half_even) {
  if (c.is_zero()) fail(errc::domain, "division by zero");
  return Fixed::from_raw(detail::from_wide(detail::div_round<wide_int>(
      detail::to_wide(a.raw()) * detail::to_wide(b.raw()), detail::to_wide(c.raw()), mode)));
}

/// a*num/den for integer num/den, rounded once.
inline Fixed scale(Fixed a, std::int64_t num, std::int64_t den, rounding mode = rounding::half_even) {
  if (den == 0) fail(errc::domain, "division by zero");
  return Fixed::from_raw(
      detail::from_wide(detail::div_round<wide_int>(detail::to_wide(a.raw()) * num, wide_int(den), mode)));
}

/// Quantizes the exact rational num/den to the nearest 1e-9, ties to even.
inline Fixed quantize(const wide_int& num, const wide_int& den) {
  if (den == 0) fail(errc::domain, "zero denominator");
  return Fixed::from_raw(
      detail::from_wide(detail::div_round<wide_int>(num * wide_int(1'000'000'000), den, rounding::half_even)));
}

inline Fixed Fixed::parse(std::string_view text) {
  auto bad = [&]() -> Fixed { fail(errc::parameter, "malformed decimal '" + std::string(text) + "'"); };
  std::size_t i = 0;
  bool neg = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) neg = text[i++] == '-';
  wide_int mantissa = 0;
  long exponent = 0;
  bool any_digit = false;
  bool seen_point = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c >= '0' && c <= '9') {
      if (mantissa > wide_int(1) << 200) return bad();
      mantissa = mantissa * 10 + (c - '0');
      any_digit = true;
      if (seen_point) --exponent;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!any_digit) return bad();
  if (i < text.size()) {
    if (text[i] != 'e' && text[i] != 'E') return bad();
    ++i;
    bool eneg = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) eneg = text[i++] == '-';
    long e = 0;
    bool edigit = false;
    for (; i < text.size(); ++i) {
      if (text[i] < '0' || text[i] > '9' || e > 1000) return bad();
      e = e * 10 + (text[i] - '0');
      edigit = true;
    }
    if (!edigit) return bad();
    exponent += eneg ? -e : e;
  }
  if (neg) mantissa = -mantissa;
  // value = mantissa * 10^exponent
  if (exponent >= 0) {
    if (exponent > 40) fail(errc::range, "decimal out of range");
    wide_int p = 1;
    for (long k = 0; k < exponent; ++k) p *= 10;
    return quantize(mantissa * p, 1);
  }
  if (-exponent > 60) return Fixed{};
  wide_int p = 1;
  for (long k = 0; k < -exponent; ++k) p *= 10;
  return quantize(mantissa, p);
}

namespace literals {
// Digit separators are allowed: 1'000_fx.
inline Fixed operator""_fx(const char* text) {
  std::string s(text);
  std::erase(s, '\'');
  return Fixed::parse(s);
}
inline Fixed operator""_fx(const char* text, std::size_t n) { return Fixed::parse({text, n}); }
}  // namespace literals

// Transcendentals: evaluated in long double (80-bit on x86-64) and quantized.

inline Fixed safe_ln(Fixed x) {
  require(x.is_positive(), errc::domain, "ln of non-positive value " + x.str());
  return Fixed::from_long_double(std::log(x.to_long_double()));
}

inline Fixed safe_exp(Fixed x) {
  const long double v = std::exp(x.to_long_double());
  if (!std::isfinite(v)) fail(errc::range, "exp overflow");
  return Fixed::from_long_double(v);
}

/// base^exponent for base >= 0, via exp(exponent * ln base).
inline Fixed pow_fixed(Fixed base, Fixed exponent) {
  require(!base.is_negative(), errc::domain, "negative base in power");
  if (base.is_zero()) return exponent.is_zero() ? Fixed::from_int(1) : Fixed{};
  const long double v = std::exp(exponent.to_long_double() * std::log(base.to_long_double()));
  if (!std::isfinite(v)) fail(errc::range, "power overflow");
  return Fixed::from_long_double(v);
}

}  // namespace rugsim
