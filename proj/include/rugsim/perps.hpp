#pragma once

#include <cstdint>
#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rugsim/core/error.hpp"
#include "rugsim/core/fixed.hpp"
#include "rugsim/core/ids.hpp"
#include "rugsim/core/ledger.hpp"
#include "rugsim/settle.hpp"

namespace rugsim::perps {

enum class Direction { Long, Short };
enum class Status { Open, Flagged, Liquidated, Closed };

inline std::string_view to_string(Direction d) { return d == Direction::Long ? "long" : "short"; }
inline std::string_view to_string(Status s) {
  switch (s) {
    case Status::Open: return "open";
    case Status::Flagged: return "flagged";
    case Status::Liquidated: return "liquidated";
    case Status::Closed: return "closed";
  }
  return "?";
}

struct Position {
  PositionId id{};
  AccountId owner{};
  VaultId vault{};
  Fixed collateral_ca{};
  Fixed leverage = Fixed::from_int(1);
  Direction direction = Direction::Long;
  Fixed entry_price{};
  Fixed unit_value{};  // anticoin value at entry, frozen
  std::uint64_t opened_at = 0;
  Status status = Status::Open;
  std::optional<std::uint64_t> flagged_at;

  bool active() const { return status == Status::Open || status == Status::Flagged; }
  Fixed collateral_value() const { return collateral_ca * unit_value; }
  Fixed notional_ca() const { return collateral_ca * leverage; }
};

struct FundingParams {
  Fixed alpha_base = Fixed::parse("0.01");
  Fixed l_min = Fixed::from_int(1000);
  std::uint64_t interval_blocks = 8;

  void validate() const {
    require(alpha_base.is_positive() && l_min.is_positive() && interval_blocks > 0, errc::parameter,
            "funding parameters must be positive");
  }
};

struct MaintenanceRule {
  Fixed maintenance_fraction = Fixed::parse("0.1");
  std::uint64_t liquidator_deadline_blocks = 5;
  Fixed liquidator_fee_fraction = Fixed::parse("0.05");

  void validate() const {
    require(maintenance_fraction.is_positive() && maintenance_fraction < Fixed::from_int(1), errc::parameter,
            "maintenance fraction must be in (0, 1)");
    require(!liquidator_fee_fraction.is_negative() && liquidator_fee_fraction < maintenance_fraction,
            errc::parameter, "liquidator fee must be below the maintenance fraction");
  }
};

struct PerpsConfig {
  Fixed leverage_max = Fixed::from_int(10);
  bool live_revaluation = false;
};

/// dir * leverage * collateral_value * (mark - entry) / entry. With
/// `live_unit_value` the collateral is revalued at the given anticoin value
/// instead of the value frozen at entry.
inline Fixed position_pnl(const Position& p, Fixed mark_price, std::optional<Fixed> live_unit_value = std::nullopt) {
  require(mark_price.is_positive(), errc::domain, "mark price must be positive");
  const Fixed cv = p.collateral_ca * live_unit_value.value_or(p.unit_value);
  const Fixed pnl = mul_div(cv * p.leverage, mark_price - p.entry_price, p.entry_price);
  return p.direction == Direction::Long ? pnl : -pnl;
}

/// (collateral_value + pnl) / collateral_value; zero once collateral is gone.
inline Fixed health(const Position& p, Fixed mark_price, std::optional<Fixed> live_unit_value = std::nullopt) {
  const Fixed cv = p.collateral_ca * live_unit_value.value_or(p.unit_value);
  if (!cv.is_positive()) return Fixed{};
  return (cv + position_pnl(p, mark_price, live_unit_value)) / cv;
}

/// alpha * (1 - n_short / (n_long + n_short)) = alpha * n_long / (n_long + n_short)
inline Fixed funding_rate(std::uint64_t n_long, std::uint64_t n_short, Fixed alpha) {
  require(n_long + n_short > 0, errc::undefined, "funding rate undefined for an empty market");
  return scale(alpha, static_cast<std::int64_t>(n_long), static_cast<std::int64_t>(n_long + n_short));
}

/// f * (1 + l_min / l_pool)
inline Fixed funding_rate_final(Fixed f, Fixed l_min, Fixed l_pool) {
  require(l_pool.is_positive(), errc::illiquid, "pool liquidity must be positive");
  return f + mul_div(f, l_min, l_pool);
}

struct FundingTransfer {
  PositionId position{};
  Fixed amount{};  // negative: paid, positive: received
};

struct FundingResult {
  std::uint64_t n_long = 0;
  std::uint64_t n_short = 0;
  Fixed rate{};
  std::optional<Direction> payer_side;
  std::vector<FundingTransfer> transfers;
  Fixed total_paid{};
  Fixed treasury_remainder{};
};

struct LiquidatorBid {
  AccountId liquidator{};
  PositionId position{};
};

struct LiquidationEvent {
  enum class Kind { Flagged, Liquidated, Rejected };
  Kind kind = Kind::Flagged;
  PositionId position{};
  std::optional<AccountId> liquidator;  // empty: protocol auto-liquidation
  Fixed health{};
  Fixed seized{};
  Fixed liquidator_fee{};
  Fixed swapped_in{};
  Fixed numeraire_out{};
  std::string reason;
};

struct CloseResult {
  Fixed returned{};
  Fixed pnl_ca{};
};

/// Position book for one vault's anticoin. Collateral sits in `escrow`;
/// funding remainders, liquidation proceeds and PnL settlement go through
/// `treasury`.
class PerpBook {
 public:
  PerpBook(VaultId vault, TokenId anticoin, AccountId escrow, AccountId treasury, PerpsConfig cfg = {})
      : vault_(vault), anticoin_(anticoin), escrow_(escrow), treasury_(treasury), cfg_(cfg) {}

  VaultId vault() const { return vault_; }
  TokenId anticoin() const { return anticoin_; }
  AccountId escrow() const { return escrow_; }
  AccountId treasury() const { return treasury_; }
  const PerpsConfig& config() const { return cfg_; }
  const std::vector<Position>& positions() const { return positions_; }

  const Position& position(PositionId id) const {
    require(id.value >= 1 && id.value <= positions_.size(), errc::not_found, "unknown position");
    return positions_[id.value - 1];
  }

  /// Escrows collateral; `unit_value` is the anticoin value at the mark.
  const Position& open_position(Ledger& ledger, AccountId user, Fixed collateral_ca, Fixed leverage, Direction dir,
                                Fixed mark_price, Fixed unit_value, std::uint64_t now) {
    require(collateral_ca.is_positive(), errc::parameter, "collateral must be positive");
    require(leverage >= Fixed::from_int(1) && leverage <= cfg_.leverage_max, errc::parameter,
            "leverage out of range");
    require(mark_price.is_positive(), errc::parameter, "mark price must be positive");
    require(unit_value.is_positive(), errc::parameter, "anticoin collateral has no value at this price");
    require(ledger.balance(user, anticoin_) >= collateral_ca, errc::balance, "insufficient anticoin collateral");
    ledger.transfer(user, escrow_, anticoin_, collateral_ca);
    Position p;
    p.id = PositionId{static_cast<std::uint32_t>(positions_.size() + 1)};
    p.owner = user;
    p.vault = vault_;
    p.collateral_ca = collateral_ca;
    p.leverage = leverage;
    p.direction = dir;
    p.entry_price = mark_price;
    p.unit_value = unit_value;
    p.opened_at = now;
    positions_.push_back(p);
    return positions_.back();
  }

  /// Majority side pays rate * notional; the minority receives pro-rata by
  /// notional; the rounding remainder goes to the treasury.
  FundingResult apply_funding(Ledger& ledger, const FundingParams& params, Fixed l_pool, std::uint64_t height) {
    require(height % params.interval_blocks == 0, errc::state, "not a funding boundary");
    FundingResult r;
    for (const auto& p : positions_)
      if (p.active()) (p.direction == Direction::Long ? r.n_long : r.n_short)++;
    if (r.n_long == 0 || r.n_short == 0 || r.n_long == r.n_short) return r;
    r.rate = funding_rate_final(funding_rate(r.n_long, r.n_short, params.alpha_base), params.l_min, l_pool);
    const Direction payer = r.n_long > r.n_short ? Direction::Long : Direction::Short;
    r.payer_side = payer;

    Fixed receiver_notional;
    for (auto& p : positions_) {
      if (!p.active()) continue;
      if (p.direction == payer) {
        const Fixed pay = min(p.collateral_ca, p.notional_ca() * r.rate);
        if (!pay.is_positive()) continue;
        p.collateral_ca -= pay;
        r.total_paid += pay;
        r.transfers.push_back({p.id, -pay});
      } else {
        receiver_notional += p.notional_ca();
      }
    }
    Fixed distributed;
    if (receiver_notional.is_positive()) {
      for (auto& p : positions_) {
        if (!p.active() || p.direction == payer) continue;
        const Fixed share = mul_div(r.total_paid, p.notional_ca(), receiver_notional, rounding::floor);
        if (!share.is_positive()) continue;
        p.collateral_ca += share;
        distributed += share;
        r.transfers.push_back({p.id, share});
      }
    }
    r.treasury_remainder = r.total_paid - distributed;
    ledger.transfer(escrow_, treasury_, anticoin_, r.treasury_remainder);
    return r;
  }

  /// Seizes a flagged position's collateral. A liquidator earns the fee and
  /// must act before the deadline; the protocol path (no liquidator) pays
  /// no fee. Whatever is not paid as fee is sold through the pool and the
  /// proceeds go to the treasury.
  LiquidationEvent liquidate(Ledger& ledger, PoolHandle pool, PositionId id, std::optional<AccountId> liquidator,
                             const MaintenanceRule& rule, Fixed mark_price, std::uint64_t now) {
    Position& p = mut(id);
    require(p.status == Status::Flagged, errc::invalid_liquidation, "position is not flagged for liquidation");
    if (liquidator)
      require(now < *p.flagged_at + rule.liquidator_deadline_blocks, errc::late, "liquidator deadline passed");
    LiquidationEvent ev;
    ev.kind = LiquidationEvent::Kind::Liquidated;
    ev.position = id;
    ev.liquidator = liquidator;
    ev.health = health(p, mark_price);
    ev.seized = p.collateral_ca;
    ev.liquidator_fee = liquidator ? ev.seized * rule.liquidator_fee_fraction : Fixed{};
    Fixed rest = ev.seized - ev.liquidator_fee;
    if (liquidator) ledger.transfer(escrow_, *liquidator, anticoin_, ev.liquidator_fee);
    ledger.transfer(escrow_, treasury_, anticoin_, rest);
    if (rest.is_positive() && pool.pool != nullptr && market::try_quote(*pool.pool, anticoin_, rest)) {
      ev.swapped_in = rest;
      ev.numeraire_out = ledger_swap(ledger, pool, treasury_, anticoin_, rest).amount_out;
    }
    p.collateral_ca = Fixed{};
    p.status = Status::Liquidated;
    return ev;
  }

  /// Flags under-collateralized positions, executes liquidator bids, then
  /// auto-liquidates anything wiped out or past its deadline. Invalid bids
  /// are reported as Rejected events.
  std::vector<LiquidationEvent> flag_and_liquidate(Ledger& ledger, PoolHandle pool, const MaintenanceRule& rule,
                                                   Fixed mark_price, const std::vector<LiquidatorBid>& bids,
                                                   std::uint64_t now,
                                                   std::optional<Fixed> live_unit_value = std::nullopt) {
    std::vector<LiquidationEvent> out;
    const auto uv = cfg_.live_revaluation ? live_unit_value : std::nullopt;
    std::vector<PositionId> wiped;
    for (auto& p : positions_) {
      if (p.status != Status::Open) continue;
      const Fixed h = health(p, mark_price, uv);
      if (h > rule.maintenance_fraction) continue;
      p.status = Status::Flagged;
      p.flagged_at = now;
      LiquidationEvent ev;
      ev.position = p.id;
      ev.health = h;
      out.push_back(ev);
      if (!h.is_positive()) wiped.push_back(p.id);
    }
    for (const auto& bid : bids) {
      try {
        out.push_back(liquidate(ledger, pool, bid.position, bid.liquidator, rule, mark_price, now));
      } catch (const error& e) {
        LiquidationEvent ev;
        ev.kind = LiquidationEvent::Kind::Rejected;
        ev.position = bid.position;
        ev.liquidator = bid.liquidator;
        ev.reason = e.what();
        out.push_back(ev);
      }
    }
    for (auto& p : positions_) {
      if (p.status != Status::Flagged) continue;
      const bool is_wiped = std::find(wiped.begin(), wiped.end(), p.id) != wiped.end();
      if (is_wiped || now >= *p.flagged_at + rule.liquidator_deadline_blocks)
        out.push_back(liquidate(ledger, pool, p.id, std::nullopt, rule, mark_price, now));
    }
    return out;
  }

  /// Returns collateral plus PnL converted at the frozen unit value. Gains
  /// are paid from the treasury (capped by its holdings); losses go to it.
  CloseResult close_position(Ledger& ledger, PositionId id, AccountId requester, Fixed mark_price) {
    Position& p = mut(id);
    require(p.owner == requester, errc::not_party, "only the owner may close a position");
    require(p.status == Status::Open, errc::state, "position is not open");
    CloseResult r;
    const Fixed pnl = position_pnl(p, mark_price);
    r.pnl_ca = pnl / p.unit_value;
    if (r.pnl_ca.is_negative()) {
      const Fixed loss = min(-r.pnl_ca, p.collateral_ca);
      ledger.transfer(escrow_, treasury_, anticoin_, loss);
      r.pnl_ca = -loss;
      r.returned = p.collateral_ca - loss;
      ledger.transfer(escrow_, p.owner, anticoin_, r.returned);
    } else {
      const Fixed gain = min(r.pnl_ca, ledger.balance(treasury_, anticoin_));
      ledger.transfer(treasury_, p.owner, anticoin_, gain);
      r.pnl_ca = gain;
      ledger.transfer(escrow_, p.owner, anticoin_, p.collateral_ca);
      r.returned = p.collateral_ca + gain;
    }
    p.collateral_ca = Fixed{};
    p.status = Status::Closed;
    return r;
  }

  /// Sum of collateral held for active positions; equals the escrow balance.
  Fixed escrowed() const {
    Fixed total;
    for (const auto& p : positions_)
      if (p.active()) total += p.collateral_ca;
    return total;
  }

 private:
  Position& mut(PositionId id) {
    require(id.value >= 1 && id.value <= positions_.size(), errc::not_found, "unknown position");
    return positions_[id.value - 1];
  }

  VaultId vault_;
  TokenId anticoin_;
  AccountId escrow_;
  AccountId treasury_;
  PerpsConfig cfg_;
  std::vector<Position> positions_;
};

}  // namespace rugsim::perps
