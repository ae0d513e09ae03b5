#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rugsim/core/error.hpp"
#include "rugsim/core/fixed.hpp"
#include "rugsim/tokenomics.hpp"
#include "rugsim/vault.hpp"

namespace rugsim::figures {

struct Point {
  std::string series;
  Fixed x{};
  Fixed y{};
};

inline constexpr std::string_view kFigureKeys[] = {"peg", "supply", "whale", "cumulative"};

/// `n` evenly spaced points over [lo, hi], endpoints included.
inline std::vector<Fixed> linear_grid(Fixed lo, Fixed hi, std::size_t n) {
  require(n >= 2 && lo < hi, errc::parameter, "grid needs two points and lo < hi");
  std::vector<Fixed> out;
  out.reserve(n);
  const Fixed span = hi - lo;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(lo + scale(span, static_cast<std::int64_t>(i), static_cast<std::int64_t>(n - 1)));
  return out;
}

/// Anticoin value for a token created at 100, as its price rises from 0.01
/// to 200 and as it falls back.
inline std::vector<Point> peg_series(std::size_t n = 200) {
  vault::Vault v;
  v.price_at_creation = Fixed::from_int(100);
  const auto grid = linear_grid(Fixed::parse("0.01"), Fixed::from_int(200), n);
  std::vector<Point> out;
  for (const Fixed p : grid) out.push_back({"rising", p, vault::anticoin_value(v, p)});
  for (auto it = grid.rbegin(); it != grid.rend(); ++it) out.push_back({"falling", *it, vault::anticoin_value(v, *it)});
  return out;
}

/// Target supply against total vaulted value, s0 = 1, x from 1 to e^16 on
/// a log-spaced grid.
inline std::vector<Point> supply_series(std::size_t n = 1000) {
  std::vector<Point> out;
  const Fixed s0 = Fixed::from_int(1);
  for (std::size_t i = 0; i < n; ++i) {
    const long double m = 16.0L * static_cast<long double>(i) / static_cast<long double>(n - 1);
    const Fixed x = Fixed::from_long_double(std::exp(m));
    out.push_back({"target", x, tokenomics::target_supply(x, s0)});
  }
  return out;
}

/// k * H^lambda for lambda in {1.5, 2, 3}, k = 1, H = 1..100.
inline std::vector<Point> whale_series() {
  std::vector<Point> out;
  for (const char* lambda : {"1.5", "2", "3"}) {
    const Fixed l = Fixed::parse(lambda);
    for (int h = 1; h <= 100; ++h)
      out.push_back({std::string("lambda=") + lambda, Fixed::from_int(h),
                     vault::whale_penalty(Fixed::from_int(h), Fixed::from_int(1), l)});
  }
  return out;
}

/// Cumulative penalty for H = 1..100 split over 1, 4 and 10 withdrawals,
/// gamma = 0.1, dgamma = 0.01.
inline std::vector<Point> cumulative_series() {
  std::vector<Point> out;
  const Fixed gamma = Fixed::parse("0.1");
  const Fixed dgamma = Fixed::parse("0.01");
  for (const std::uint64_t n : {1u, 4u, 10u})
    for (int h = 1; h <= 100; ++h)
      out.push_back({"n=" + std::to_string(n), Fixed::from_int(h),
                     vault::cumulative_penalty(Fixed::from_int(h), n, gamma, dgamma)});
  return out;
}

inline std::vector<Point> figure(std::string_view key) {
  if (key == "peg") return peg_series();
  if (key == "supply") return supply_series();
  if (key == "whale") return whale_series();
  if (key == "cumulative") return cumulative_series();
  fail(errc::usage, "unknown figure '" + std::string(key) + "'");
}

inline std::string to_csv(const std::vector<Point>& pts) {
  std::string out = "series,x,y\n";
  for (const auto& p : pts) out += p.series + "," + p.x.str() + "," + p.y.str() + "\n";
  return out;
}

}  // namespace rugsim::figures
