#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "rugsim/core/fixed.hpp"
#include "rugsim/core/hash.hpp"

namespace rugsim {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seeded generator for one named substream.
///
/// Each consumer derives its own stream from (seed, stream name), so adding
/// a consumer never shifts another consumer's draws. Only the engine is taken
/// from the standard library; draws are mapped to ranges here because the
/// std distributions are not specified bit-for-bit across implementations.
class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view stream)
      : engine_(splitmix64(seed ^ splitmix64(fnv1a64(stream)))) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do v = engine_();
    while (v >= limit);
    return v % n;
  }

  /// Uniform on the 1e-9 lattice in [lo, hi].
  Fixed uniform(Fixed lo, Fixed hi) {
    if (hi <= lo) return lo;
    const uint128 span = static_cast<uint128>(hi.raw() - lo.raw()) + 1;
    uint128 draw;
    if (span <= ~std::uint64_t{0}) {
      draw = below(static_cast<std::uint64_t>(span));
    } else {
      draw = ((static_cast<uint128>(next()) << 64) | next()) % span;
    }
    return Fixed::from_raw(lo.raw() + static_cast<int128>(draw));
  }

  /// True with probability p (clamped to [0,1]).
  bool chance(Fixed p) {
    if (p <= Fixed{}) return false;
    if (p >= Fixed::from_int(1)) return true;
    return static_cast<int128>(below(static_cast<std::uint64_t>(Fixed::kScale))) < p.raw();
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rugsim
