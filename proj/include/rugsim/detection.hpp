#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "rugsim/core/error.hpp"
#include "rugsim/core/fixed.hpp"
#include "rugsim/core/ids.hpp"
#include "rugsim/core/ledger.hpp"
#include "rugsim/market.hpp"
#include "rugsim/settle.hpp"

namespace rugsim::detection {

enum class SignalKind { LiquidityDrop, MintSpike, WalletOutflow, VolumeAnomaly };

inline std::string_view to_string(SignalKind k) {
  switch (k) {
    case SignalKind::LiquidityDrop: return "liquidity_drop";
    case SignalKind::MintSpike: return "mint_spike";
    case SignalKind::WalletOutflow: return "wallet_outflow";
    case SignalKind::VolumeAnomaly: return "volume_anomaly";
  }
  return "?";
}

struct RiskSignal {
  SignalKind kind = SignalKind::LiquidityDrop;
  Fixed magnitude{};
  std::uint64_t height = 0;
};

struct MonitorConfig {
  Fixed drop_threshold = Fixed::parse("0.2");
  Fixed mint_spike_factor = Fixed::from_int(3);
  Fixed wallet_outflow_fraction = Fixed::parse("0.5");
  Fixed volume_spike_factor = Fixed::from_int(4);
  std::size_t window = 16;

  void validate() const {
    require(drop_threshold.is_positive() && drop_threshold < Fixed::from_int(1), errc::parameter,
            "drop threshold must be in (0, 1)");
    require(mint_spike_factor.is_positive() && volume_spike_factor.is_positive(), errc::parameter,
            "spike factors must be positive");
    require(wallet_outflow_fraction.is_positive(), errc::parameter, "outflow fraction must be positive");
    require(window > 0, errc::parameter, "window must be positive");
  }
};

/// Per-block activity the auxiliary scan looks at.
struct BlockActivity {
  std::uint64_t height = 0;
  Fixed minted{};
  Fixed creator_outflow{};
  Fixed creator_balance{};  // before the outflow
  Fixed volume{};
  Fixed delta_liquidity{};
};

class PoolMonitor {
 public:
  explicit PoolMonitor(PoolId pool, MonitorConfig cfg = {}) : pool_(pool), cfg_(cfg) { cfg_.validate(); }

  PoolId pool() const { return pool_; }
  const MonitorConfig& config() const { return cfg_; }

  struct Observation {
    std::uint64_t height = 0;
    Fixed liquidity{};
  };
  const std::deque<Observation>& window() const { return obs_; }

  /// LiquidityDrop when -dL / L_prev exceeds the threshold.
  std::optional<RiskSignal> observe(std::uint64_t height, Fixed l_pool) {
    require(obs_.empty() || height > obs_.back().height, errc::ordering, "observations must increase in height");
    std::optional<RiskSignal> sig;
    if (!obs_.empty() && obs_.back().liquidity.is_positive()) {
      const Fixed prev = obs_.back().liquidity;
      const Fixed drop = (prev - l_pool) / prev;
      if (drop > cfg_.drop_threshold) sig = RiskSignal{SignalKind::LiquidityDrop, drop, height};
    }
    push(obs_, {height, l_pool});
    return sig;
  }

  /// Compares the block against trailing means of earlier blocks; the first
  /// block has no history and raises no mint or volume signal.
  std::vector<RiskSignal> scan_aux(const BlockActivity& a) {
    std::vector<RiskSignal> out;
    const auto mint_mean = trailing_mean(&BlockActivity::minted);
    if (mint_mean && mint_mean->is_positive() && a.minted > *mint_mean * cfg_.mint_spike_factor)
      out.push_back({SignalKind::MintSpike, a.minted / *mint_mean, a.height});
    if (a.creator_balance.is_positive() && a.creator_outflow > a.creator_balance * cfg_.wallet_outflow_fraction)
      out.push_back({SignalKind::WalletOutflow, a.creator_outflow / a.creator_balance, a.height});
    const auto vol_mean = trailing_mean(&BlockActivity::volume);
    if (vol_mean && vol_mean->is_positive() && !a.delta_liquidity.is_positive() &&
        a.volume > *vol_mean * cfg_.volume_spike_factor)
      out.push_back({SignalKind::VolumeAnomaly, a.volume / *vol_mean, a.height});
    push(activity_, a);
    return out;
  }

 private:
  template <class T>
  void push(std::deque<T>& q, T v) {
    q.push_back(v);
    if (q.size() > cfg_.window) q.pop_front();
  }

  std::optional<Fixed> trailing_mean(Fixed BlockActivity::*field) const {
    if (activity_.empty()) return std::nullopt;
    Fixed sum;
    for (const auto& a : activity_) sum += a.*field;
    return sum / Fixed::from_int(static_cast<std::int64_t>(activity_.size()));
  }

  PoolId pool_;
  MonitorConfig cfg_;
  std::deque<Observation> obs_;
  std::deque<BlockActivity> activity_;
};

// ---------------------------------------------------------------------------
// Intervention plans

enum class LegKind { FrontrunSell, SandwichPre, SandwichPost, BackrunBuy };

inline std::string_view to_string(LegKind k) {
  switch (k) {
    case LegKind::FrontrunSell: return "frontrun_sell";
    case LegKind::SandwichPre: return "sandwich_pre";
    case LegKind::SandwichPost: return "sandwich_post";
    case LegKind::BackrunBuy: return "backrun_buy";
  }
  return "?";
}

struct TxLeg {
  LegKind kind = LegKind::FrontrunSell;
  AccountId actor{};
  PoolId pool{};
  TokenId input{};
  Fixed amount_in{};
  Fixed expected_out{};
  int priority = 0;
  std::uint64_t seq = 0;
};

struct TxPlan {
  std::vector<TxLeg> legs;
  Fixed expected_profit{};
  Fixed nominal_size{};  // back-run: spend / post-drain price
  bool salvage = false;

  bool empty() const { return legs.empty(); }
};

/// Execution order inside a block: priority descending, then sequence.
inline bool executes_before(const TxLeg& a, const TxLeg& b) {
  if (a.priority != b.priority) return a.priority > b.priority;
  return a.seq < b.seq;
}

inline void order_legs(std::vector<TxLeg>& legs) { std::stable_sort(legs.begin(), legs.end(), executes_before); }

inline void require_window_open(const market::DrainEvent& pending, std::uint64_t now) {
  require(now < pending.executes_at.height, errc::too_late, "drain window has closed");
}

/// Sells the protected holdings ahead of the drain at pre-drain reserves.
inline TxPlan plan_frontrun(const market::DrainEvent& pending, const market::PoolState& pool, AccountId holder,
                            Fixed holdings, std::uint64_t now, int priority_bump = 1) {
  require_window_open(pending, now);
  TxPlan plan;
  if (!holdings.is_positive()) return plan;
  const auto q = market::try_quote(pool, pending.rug_token, holdings);
  if (!q) return plan;
  plan.legs.push_back({LegKind::FrontrunSell, holder, pool.id, pending.rug_token, holdings, q->amount_out,
                       pending.priority + priority_bump, 0});
  plan.expected_profit = q->amount_out;
  return plan;
}

/// Sell `budget` rug tokens before the drain and buy the same quantity back
/// after it. Profit comes from replaying pre-leg, drain and post-leg on a
/// pool copy; unprofitable sandwiches are withheld.
inline std::optional<TxPlan> plan_sandwich(const market::DrainEvent& pending, const market::PoolState& pool,
                                           AccountId actor, Fixed budget, std::uint64_t now,
                                           int priority_bump = 1) {
  require_window_open(pending, now);
  if (!budget.is_positive() || !pending.t_rug.is_positive()) return std::nullopt;
  market::PoolState sim = pool;
  const TokenId rug = pending.rug_token;
  const TokenId liquid = pool.other(rug);
  const auto pre = market::try_quote(sim, rug, budget);
  if (!pre) return std::nullopt;
  market::pool_swap(sim, rug, budget);
  if (!market::try_quote(sim, rug, pending.t_rug)) return std::nullopt;
  market::pool_swap(sim, rug, pending.t_rug);
  if (budget >= sim.reserve_of(rug)) return std::nullopt;
  Fixed cost;
  try {
    cost = market::input_for_output(sim, liquid, budget);
  } catch (const error&) {
    return std::nullopt;
  }
  const auto post = market::try_quote(sim, liquid, cost);
  if (!post) return std::nullopt;
  const Fixed profit = pre->amount_out - cost;
  if (!profit.is_positive()) return std::nullopt;
  TxPlan plan;
  plan.legs.push_back(
      {LegKind::SandwichPre, actor, pool.id, rug, budget, pre->amount_out, pending.priority + priority_bump, 0});
  plan.legs.push_back(
      {LegKind::SandwichPost, actor, pool.id, liquid, cost, post->amount_out, pending.priority - priority_bump, 1});
  plan.expected_profit = profit;
  return plan;
}

/// Buys rug tokens at the collapsed post-drain price, up to min(cap, budget)
/// of the liquid token. The purchase is salvage meant for a vault deposit.
inline TxPlan plan_backrun(const market::DrainOutcome& executed, const market::PoolState& pool, TokenId rug_token,
                           AccountId actor, Fixed budget, Fixed value_cap) {
  TxPlan plan;
  if (!executed.liquid_out.is_positive()) return plan;
  const Fixed spend = min(budget, value_cap);
  if (!spend.is_positive()) return plan;
  const TokenId liquid = pool.other(rug_token);
  const auto q = market::try_quote(pool, liquid, spend);
  if (!q) return plan;
  plan.legs.push_back({LegKind::BackrunBuy, actor, pool.id, liquid, spend, q->amount_out, 0, 0});
  plan.nominal_size = spend / executed.spot_after;
  plan.salvage = true;
  return plan;
}

// ---------------------------------------------------------------------------
// Intents and solvers

enum class IntentAction { ExitToNumeraire, SwapToAnticoin };
enum class IntentStatus { Pending, Executed, Failed };

inline std::string_view to_string(IntentAction a) {
  return a == IntentAction::ExitToNumeraire ? "exit_to_numeraire" : "swap_to_anticoin";
}
inline std::string_view to_string(IntentStatus s) {
  switch (s) {
    case IntentStatus::Pending: return "pending";
    case IntentStatus::Executed: return "executed";
    case IntentStatus::Failed: return "failed";
  }
  return "?";
}

struct Intent {
  IntentId id{};
  AccountId owner{};
  VaultId vault{};
  PoolId pool{};
  TokenId token{};  // the protected rug-able token
  Fixed theta_price{};
  Fixed theta_liquidity{};
  IntentAction action = IntentAction::ExitToNumeraire;
  int solver_fee_bps = 0;  // highest fee the owner accepts
  Fixed p0{};              // reference price P_r(0)
  Fixed l0{};              // reference liquidity L_pool(0)
  IntentStatus status = IntentStatus::Pending;
};

struct MarketView {
  Fixed price{};
  Fixed liquidity{};
};

struct TriggerState {
  bool price = false;
  bool liquidity = false;
  bool any() const { return price || liquidity; }
};

/// Either threshold crossing triggers.
inline TriggerState triggered(const Intent& in, const MarketView& m) {
  return {m.price <= in.theta_price * in.p0, m.liquidity <= in.theta_liquidity * in.l0};
}

struct SolverBid {
  AccountId solver{};
  int fee_bps = 0;
};

struct IntentFill {
  IntentId intent{};
  AccountId solver{};
  int fee_bps = 0;
  TriggerState trigger;
};

class IntentBook {
 public:
  IntentId register_intent(Intent in) {
    const auto open_unit = [](Fixed f) { return f.is_positive() && f < Fixed::from_int(1); };
    require(open_unit(in.theta_price) && open_unit(in.theta_liquidity), errc::parameter,
            "intent thresholds must be in (0, 1)");
    require(in.solver_fee_bps >= 0 && in.solver_fee_bps <= 10'000, errc::parameter, "solver fee out of range");
    require(in.p0.is_positive() && in.l0.is_positive(), errc::parameter, "reference price and liquidity must be positive");
    in.id = IntentId{static_cast<std::uint32_t>(intents_.size() + 1)};
    in.status = IntentStatus::Pending;
    intents_.push_back(in);
    return in.id;
  }

  const std::vector<Intent>& intents() const { return intents_; }
  const Intent& intent(IntentId id) const {
    require(id.value >= 1 && id.value <= intents_.size(), errc::not_found, "unknown intent");
    return intents_[id.value - 1];
  }

  /// Picks a solver for every triggered pending intent: lowest fee within
  /// the intent's cap, ties to the lowest solver id. Selected intents are
  /// consumed; triggered intents without an eligible bid stay pending.
  std::vector<IntentFill> solver_step(const std::function<MarketView(const Intent&)>& view,
                                      const std::vector<SolverBid>& bids) {
    std::vector<IntentFill> fills;
    for (auto& in : intents_) {
      if (in.status != IntentStatus::Pending) continue;
      const TriggerState t = triggered(in, view(in));
      if (!t.any()) continue;
      const SolverBid* best = nullptr;
      for (const auto& b : bids) {
        if (b.fee_bps < 0 || b.fee_bps > in.solver_fee_bps) continue;
        if (!best || b.fee_bps < best->fee_bps || (b.fee_bps == best->fee_bps && b.solver < best->solver)) best = &b;
      }
      if (!best) continue;
      in.status = IntentStatus::Executed;
      fills.push_back({in.id, best->solver, best->fee_bps, t});
    }
    return fills;
  }

  void mark_failed(IntentId id) {
    require(id.value >= 1 && id.value <= intents_.size(), errc::not_found, "unknown intent");
    intents_[id.value - 1].status = IntentStatus::Failed;
  }

 private:
  std::vector<Intent> intents_;
};

struct ExitResult {
  Fixed sold{};
  Fixed proceeds{};
  Fixed solver_fee{};
};

/// Sells the owner's whole balance of the protected token and pays the
/// solver its fee out of the proceeds (rounded down).
inline ExitResult execute_exit(Ledger& ledger, PoolHandle pool, const Intent& in, AccountId solver, int fee_bps) {
  ExitResult r;
  r.sold = ledger.balance(in.owner, in.token);
  require(r.sold.is_positive(), errc::balance, "intent owner holds nothing to exit");
  const auto q = ledger_swap(ledger, pool, in.owner, in.token, r.sold);
  r.proceeds = q.amount_out;
  r.solver_fee = scale(r.proceeds, fee_bps, 10'000, rounding::floor);
  ledger.transfer(in.owner, solver, q.token_out, r.solver_fee);
  return r;
}

}  // namespace rugsim::detection
