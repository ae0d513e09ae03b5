#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "rugsim/core/error.hpp"
#include "rugsim/core/fixed.hpp"
#include "rugsim/core/ids.hpp"

namespace rugsim::market {

// ---------------------------------------------------------------------------
// Price processes

enum class PriceKind { Scam, Catastrophic, Sentiment };

inline std::string_view to_string(PriceKind k) {
  switch (k) {
    case PriceKind::Scam: return "scam";
    case PriceKind::Catastrophic: return "catastrophic";
    case PriceKind::Sentiment: return "sentiment";
  }
  return "?";
}

/// Rug-pull price trajectory. Only the parameters of the active kind are
/// read. `onset` is the block at which decay starts; the price is `p0`
/// before it.
struct PriceProcess {
  PriceKind kind = PriceKind::Scam;
  Fixed p0 = Fixed::from_int(1);
  Fixed tau_rug = Fixed::from_int(1);
  Fixed lambda{};
  Fixed alpha_sent{};
  Fixed epsilon_floor = Fixed::quantum();
  std::uint64_t onset = 0;
};

namespace detail {
inline void check_common(const PriceProcess& p) {
  require(p.p0.is_positive(), errc::parameter, "p0 must be positive");
  require(p.epsilon_floor.is_positive(), errc::parameter, "epsilon floor must be positive");
}
inline Fixed decay(Fixed p0, long double exponent, Fixed floor) {
  return max(Fixed::from_long_double(p0.to_long_double() * std::exp(exponent)), floor);
}
}  // namespace detail

/// max(p0 * e^(-t/tau), floor)
inline Fixed price_scam(const PriceProcess& p, Fixed t) {
  require(p.kind == PriceKind::Scam, errc::parameter, "process is not a scam process");
  detail::check_common(p);
  require(p.tau_rug.is_positive(), errc::parameter, "tau_rug must be positive");
  return detail::decay(p.p0, -t.to_long_double() / p.tau_rug.to_long_double(), p.epsilon_floor);
}

/// max(p0 * e^(-lambda t), floor)
inline Fixed price_catastrophic(const PriceProcess& p, Fixed t) {
  require(p.kind == PriceKind::Catastrophic, errc::parameter, "process is not a catastrophic process");
  detail::check_common(p);
  require(!p.lambda.is_negative(), errc::parameter, "lambda must be non-negative");
  if (p.lambda.is_zero()) return max(p.p0, p.epsilon_floor);
  return detail::decay(p.p0, -(p.lambda.to_long_double() * t.to_long_double()), p.epsilon_floor);
}

/// max(p0 / (1 + alpha t), floor)
inline Fixed price_sentiment(const PriceProcess& p, Fixed t) {
  require(p.kind == PriceKind::Sentiment, errc::parameter, "process is not a sentiment process");
  detail::check_common(p);
  require(!p.alpha_sent.is_negative(), errc::parameter, "alpha must be non-negative");
  return max(p.p0 / (Fixed::from_int(1) + p.alpha_sent * t), p.epsilon_floor);
}

inline Fixed price(const PriceProcess& p, Fixed t) {
  switch (p.kind) {
    case PriceKind::Scam: return price_scam(p, t);
    case PriceKind::Catastrophic: return price_catastrophic(p, t);
    case PriceKind::Sentiment: return price_sentiment(p, t);
  }
  fail(errc::parameter, "unknown price kind");
}

inline Fixed price_at_height(const PriceProcess& p, std::uint64_t height) {
  const std::uint64_t t = height > p.onset ? height - p.onset : 0;
  return price(p, Fixed::from_int(static_cast<std::int64_t>(t)));
}

inline void validate(const PriceProcess& p) {
  price(p, Fixed{});
}

// ---------------------------------------------------------------------------
// Constant-product pool

struct PoolState {
  PoolId id{};
  TokenId token_x{};
  TokenId token_y{};
  Fixed reserve_x{};
  Fixed reserve_y{};
  int fee_bps = 0;
  Fixed k_last{};
  Fixed lp_supply{};
  std::map<AccountId, Fixed> lp_shares;
  Fixed volume_x{};
  Fixed volume_y{};
  bool closed = false;

  bool has(TokenId t) const { return t == token_x || t == token_y; }
  TokenId other(TokenId t) const { return t == token_x ? token_y : token_x; }
  Fixed reserve_of(TokenId t) const { return t == token_x ? reserve_x : reserve_y; }

  /// Mid price reserve_y / reserve_x, fee-exclusive.
  Fixed spot() const {
    require(reserve_x.is_positive(), errc::illiquid, "pool has no x reserve");
    return reserve_y / reserve_x;
  }

  /// Price of `t` in units of the other token.
  Fixed price_of(TokenId t) const {
    require(has(t), errc::parameter, "token not in pool");
    const Fixed own = reserve_of(t);
    require(own.is_positive(), errc::illiquid, "pool has no reserve of token");
    return reserve_of(other(t)) / own;
  }

  /// Total liquidity measured on the quote side.
  Fixed liquidity() const { return reserve_y; }
};

inline PoolState make_pool(PoolId id, TokenId x, TokenId y, int fee_bps) {
  require(fee_bps >= 0 && fee_bps <= 10'000, errc::parameter, "fee_bps must be in [0, 10000]");
  require(x != y, errc::parameter, "pool tokens must differ");
  PoolState p;
  p.id = id;
  p.token_x = x;
  p.token_y = y;
  p.fee_bps = fee_bps;
  return p;
}

struct SwapQuote {
  TokenId token_out{};
  Fixed amount_out{};
  Fixed new_reserve_in{};
  Fixed new_reserve_out{};
};

/// Output of swapping `dx` of `input` without mutating the pool. Returns
/// nullopt for trades the pool rejects (zero input, dust output, drained
/// reserves); `pool_swap` reports the reason.
inline std::optional<SwapQuote> try_quote(const PoolState& pool, TokenId input, Fixed dx) {
  if (!dx.is_positive() || !pool.has(input) || pool.closed) return std::nullopt;
  const Fixed rin = pool.reserve_of(input);
  const Fixed rout = pool.reserve_of(pool.other(input));
  if (rin <= Fixed::quantum() || rout <= Fixed::quantum()) return std::nullopt;
  // new_out = rin*rout / (rin + dx*(1-fee)), computed exactly and rounded
  // up so the pool never pays out more than the invariant allows.
  const wide_int num = ::rugsim::detail::to_wide(rin.raw()) * ::rugsim::detail::to_wide(rout.raw()) * 10'000;
  const wide_int den = ::rugsim::detail::to_wide(rin.raw()) * 10'000 +
                       ::rugsim::detail::to_wide(dx.raw()) * (10'000 - pool.fee_bps);
  const Fixed new_out = Fixed::from_raw(
      ::rugsim::detail::from_wide(::rugsim::detail::div_round<wide_int>(num, den, rounding::ceil)));
  const Fixed dy = rout - new_out;
  if (!dy.is_positive()) return std::nullopt;
  return SwapQuote{pool.other(input), dy, rin + dx, new_out};
}

inline SwapQuote quote_swap(const PoolState& pool, TokenId input, Fixed dx) {
  require(dx.is_positive(), errc::parameter, "swap input must be positive");
  require(pool.has(input), errc::parameter, "token not in pool");
  require(!pool.closed, errc::illiquid, "pool is closed");
  require(pool.reserve_of(input) > Fixed::quantum() && pool.reserve_of(pool.other(input)) > Fixed::quantum(),
          errc::illiquid, "pool is drained");
  auto q = try_quote(pool, input, dx);
  require(q.has_value(), errc::dust, "swap output rounds to zero");
  return *q;
}

/// Constant-product swap with the fee retained in the pool.
inline SwapQuote pool_swap(PoolState& pool, TokenId input, Fixed dx) {
  const SwapQuote q = quote_swap(pool, input, dx);
  if (input == pool.token_x) {
    pool.reserve_x = q.new_reserve_in;
    pool.reserve_y = q.new_reserve_out;
    pool.volume_x += dx;
  } else {
    pool.reserve_y = q.new_reserve_in;
    pool.reserve_x = q.new_reserve_out;
    pool.volume_y += dx;
  }
  pool.k_last = pool.reserve_x * pool.reserve_y;
  return q;
}

/// Smallest input of `input` that yields at least `want` of the other token.
inline Fixed input_for_output(const PoolState& pool, TokenId input, Fixed want) {
  require(want.is_positive(), errc::parameter, "desired output must be positive");
  require(pool.has(input), errc::parameter, "token not in pool");
  const Fixed rin = pool.reserve_of(input);
  const Fixed rout = pool.reserve_of(pool.other(input));
  require(want < rout, errc::illiquid, "desired output exceeds reserve");
  // dx*(1-fee) = rin*want / (rout - want)
  const wide_int num = ::rugsim::detail::to_wide(rin.raw()) * ::rugsim::detail::to_wide(want.raw()) * 10'000;
  const wide_int den = ::rugsim::detail::to_wide((rout - want).raw()) * (10'000 - pool.fee_bps);
  require(den != 0, errc::illiquid, "fee consumes all input");
  Fixed dx = Fixed::from_raw(::rugsim::detail::from_wide(::rugsim::detail::div_round<wide_int>(num, den, rounding::ceil)));
  // Output rounding can leave the quote a quantum short; step up until met.
  for (int i = 0; i < 4; ++i) {
    auto q = try_quote(pool, input, dx);
    if (q && q->amount_out >= want) return dx;
    dx += Fixed::quantum();
  }
  return dx;
}

struct LiquidityChange {
  Fixed amount_x{};
  Fixed amount_y{};
  Fixed shares{};
};

/// Deposits (dx, dy) at the current reserve ratio and mints LP shares.
/// An empty pool is seeded at any ratio with shares = dx.
inline LiquidityChange pool_add_liquidity(PoolState& pool, AccountId provider, Fixed dx, Fixed dy) {
  require(dx.is_positive() && dy.is_positive(), errc::parameter, "liquidity amounts must be positive");
  LiquidityChange c{dx, dy, {}};
  if (pool.lp_supply.is_zero() || pool.reserve_x.is_zero() || pool.reserve_y.is_zero()) {
    c.shares = dx;
    pool.closed = false;
  } else {
    const Fixed expected_dy = mul_div(dx, pool.reserve_y, pool.reserve_x);
    require(abs(expected_dy - dy) <= Fixed::quantum(), errc::ratio,
            "deposit ratio mismatch: expected " + expected_dy.str() + " got " + dy.str());
    c.shares = mul_div(pool.lp_supply, dx, pool.reserve_x, rounding::floor);
  }
  pool.reserve_x += dx;
  pool.reserve_y += dy;
  pool.lp_supply += c.shares;
  pool.lp_shares[provider] += c.shares;
  pool.k_last = pool.reserve_x * pool.reserve_y;
  return c;
}

/// Withdraws `share` (0 < share <= 1) of the whole pool on behalf of
/// `provider`, who must hold at least that many LP shares.
inline LiquidityChange pool_remove_liquidity(PoolState& pool, AccountId provider, Fixed share) {
  require(share.is_positive() && share <= Fixed::from_int(1), errc::parameter, "share must be in (0, 1]");
  require(pool.lp_supply.is_positive(), errc::illiquid, "pool has no liquidity");
  const bool full = share == Fixed::from_int(1);
  const Fixed burned = full ? pool.lp_supply : mul_div(pool.lp_supply, share, Fixed::from_int(1), rounding::ceil);
  auto it = pool.lp_shares.find(provider);
  const Fixed held = it == pool.lp_shares.end() ? Fixed{} : it->second;
  require(held >= burned, errc::balance, "provider holds too few LP shares");
  LiquidityChange c;
  c.shares = burned;
  if (full) {
    c.amount_x = pool.reserve_x;
    c.amount_y = pool.reserve_y;
  } else {
    c.amount_x = mul_div(pool.reserve_x, share, Fixed::from_int(1), rounding::floor);
    c.amount_y = mul_div(pool.reserve_y, share, Fixed::from_int(1), rounding::floor);
  }
  pool.reserve_x -= c.amount_x;
  pool.reserve_y -= c.amount_y;
  pool.lp_supply -= burned;
  it->second -= burned;
  if (it->second.is_zero()) pool.lp_shares.erase(it);
  if (pool.reserve_x.is_zero() || pool.reserve_y.is_zero()) pool.closed = true;
  pool.k_last = pool.reserve_x * pool.reserve_y;
  return c;
}

// ---------------------------------------------------------------------------
// Liquidity drain

struct DrainEvent {
  PoolId pool{};
  AccountId creator{};
  TokenId rug_token{};
  Fixed t_rug{};
  Fixed t_total{};
  BlockTime submitted_at{};
  BlockTime executes_at{};
  int priority = 0;
};

struct DrainOutcome {
  Fixed naive_target{};  // (T_rug / T_total) * L_pool
  Fixed liquid_out{};    // realized through the swap curve
  Fixed spot_before{};
  Fixed spot_after{};
};

/// Naive proportional drain (T_rug / T_total) * liquid reserve.
inline Fixed naive_drain_target(Fixed t_rug, Fixed t_total, Fixed liquid_reserve) {
  require(t_total.is_positive(), errc::parameter, "T_total must be positive");
  require(!t_rug.is_negative() && t_rug <= t_total, errc::parameter, "T_rug must be in [0, T_total]");
  return mul_div(t_rug, liquid_reserve, t_total);
}

/// Executes a pending drain by swapping the creator's T_rug into the pool.
inline DrainOutcome execute_drain(const DrainEvent& ev, PoolState& pool, Fixed creator_balance,
                                  std::uint64_t current_height, Fixed epsilon_floor = Fixed::quantum()) {
  require(current_height >= ev.executes_at.height, errc::early, "drain window has not elapsed");
  require(ev.executes_at.height >= ev.submitted_at.height, errc::parameter, "drain executes before submission");
  require(pool.has(ev.rug_token), errc::parameter, "rug token not in pool");
  const TokenId liquid = pool.other(ev.rug_token);
  DrainOutcome out;
  out.naive_target = naive_drain_target(ev.t_rug, ev.t_total, pool.reserve_of(liquid));
  require(creator_balance >= ev.t_rug, errc::balance, "creator holds less than T_rug");
  out.spot_before = max(pool.price_of(ev.rug_token), epsilon_floor);
  if (ev.t_rug.is_zero()) {
    out.spot_after = out.spot_before;
    return out;
  }
  out.liquid_out = pool_swap(pool, ev.rug_token, ev.t_rug).amount_out;
  out.spot_after = max(pool.price_of(ev.rug_token), epsilon_floor);
  return out;
}

// ---------------------------------------------------------------------------
// Peg keeper

struct PegKeeperConfig {
  Fixed tolerance = Fixed::parse("0.005");
  int max_iterations = 64;
};

struct PegTrade {
  TokenId input{};
  Fixed amount_in{};
  Fixed amount_out{};
  Fixed spot_before{};
  Fixed spot_after{};
};

/// Sizes the largest trade within `budget` (units of the input token) that
/// moves the anticoin's pool price toward `peg_value` without crossing it.
/// Selling anticoin when above the band, buying it when below.
inline std::optional<PegTrade> plan_peg_trade(const PoolState& pool, TokenId anticoin, Fixed peg_value, Fixed budget,
                                              const PegKeeperConfig& cfg = {}) {
  require(!peg_value.is_negative(), errc::parameter, "peg value must be non-negative");
  if (!budget.is_positive() || pool.closed || !pool.has(anticoin)) return std::nullopt;
  if (!pool.reserve_x.is_positive() || !pool.reserve_y.is_positive()) return std::nullopt;
  const Fixed spot = pool.price_of(anticoin);
  const Fixed band = peg_value * cfg.tolerance;
  if (abs(spot - peg_value) <= band) return std::nullopt;

  const bool sell_anticoin = spot > peg_value;
  const TokenId input = sell_anticoin ? anticoin : pool.other(anticoin);
  auto price_after = [&](Fixed dx) -> std::optional<Fixed> {
    auto q = try_quote(pool, input, dx);
    if (!q) return std::nullopt;
    const Fixed own = sell_anticoin ? q->new_reserve_in : q->new_reserve_out;
    const Fixed other = sell_anticoin ? q->new_reserve_out : q->new_reserve_in;
    return other / own;
  };
  auto crosses = [&](Fixed dx) {
    auto p = price_after(dx);
    if (!p) return false;
    return sell_anticoin ? *p < peg_value : *p > peg_value;
  };

  Fixed size = budget;
  if (crosses(budget)) {
    int128 lo = 0;
    int128 hi = budget.raw();
    for (int i = 0; i < cfg.max_iterations && hi - lo > 1; ++i) {
      const int128 mid = lo + (hi - lo) / 2;
      if (crosses(Fixed::from_raw(mid)))
        hi = mid;
      else
        lo = mid;
    }
    size = Fixed::from_raw(lo);
  }
  if (!size.is_positive()) return std::nullopt;
  auto q = try_quote(pool, input, size);
  if (!q) return std::nullopt;
  return PegTrade{input, size, q->amount_out, spot, *price_after(size)};
}

/// Plans and applies one peg-keeper trade to the pool.
inline std::optional<PegTrade> peg_keeper_step(PoolState& pool, TokenId anticoin, Fixed peg_value, Fixed budget,
                                               const PegKeeperConfig& cfg = {}) {
  auto trade = plan_peg_trade(pool, anticoin, peg_value, budget, cfg);
  if (trade) pool_swap(pool, trade->input, trade->amount_in);
  return trade;
}

}  // namespace rugsim::market
