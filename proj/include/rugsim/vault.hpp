#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "rugsim/core/error.hpp"
#include "rugsim/core/fixed.hpp"
#include "rugsim/core/ids.hpp"
#include "rugsim/core/ledger.hpp"
#include "rugsim/rewards.hpp"

namespace rugsim::vault {

enum class ReceiptKind { Fungible, NonFungible, Refungible };

inline std::string_view to_string(ReceiptKind k) {
  switch (k) {
    case ReceiptKind::Fungible: return "fungible";
    case ReceiptKind::NonFungible: return "nonfungible";
    case ReceiptKind::Refungible: return "refungible";
  }
  return "?";
}

struct VaultParams {
  ReceiptKind receipt_kind = ReceiptKind::Fungible;
  Fixed omega{};           // deposit reward rate
  Fixed theta{};           // burn reward rate, > omega
  Fixed penalty_k{};       // whale penalty scale
  Fixed penalty_lambda{};  // whale penalty exponent, > 1
  Fixed gamma_base{};      // base withdrawal penalty rate
  Fixed delta_gamma{};     // per-withdrawal increment
};

inline void validate(const VaultParams& p) {
  require(!p.omega.is_negative(), errc::parameter, "omega must be non-negative");
  require(p.theta > p.omega, errc::parameter, "theta must exceed omega");
  require(p.penalty_lambda > Fixed::from_int(1), errc::parameter, "penalty lambda must exceed 1");
  require(!p.penalty_k.is_negative(), errc::parameter, "penalty k must be non-negative");
  require(!p.gamma_base.is_negative(), errc::parameter, "gamma must be non-negative");
  require(!p.delta_gamma.is_negative(), errc::parameter, "delta gamma must be non-negative");
}

struct Receipt {
  VaultId vault{};
  AccountId holder{};
  ReceiptKind kind = ReceiptKind::Fungible;
  Fixed amount{};
  std::optional<std::uint64_t> nft_serial;
  std::optional<Fixed> rft_shares;
};

struct RewardEvent {
  enum class Kind { Deposit, Burn };
  Kind kind = Kind::Deposit;
  VaultId vault{};
  ChainId chain{};
  AccountId beneficiary{};
  Fixed base_amount{};
  Fixed reward{};
};

struct Vault {
  VaultId id{};
  ChainId chain{};
  TokenId rugged_token{};
  TokenId anticoin{};
  VaultParams params;
  Fixed price_at_creation{};
  AccountId custody{};       // holds deposited rugged tokens
  AccountId penalty_sink{};  // receives withdrawal penalties
  Fixed total_deposited{};
  Fixed total_burned{};
  Fixed total_withdrawn{};
  Fixed total_penalties{};
  std::vector<Receipt> receipts;
  std::uint64_t next_serial = 1;

  Fixed anticoin_supply() const { return total_deposited - total_burned - total_withdrawn; }
  /// Rugged tokens still held by the protocol (includes burned backing).
  Fixed vaulted() const { return total_deposited - total_withdrawn; }
};

/// ln(C_r(0) / C_r(t)) clamped at zero when the price is at or above the
/// creation price. Prices below `epsilon_floor` are read as the floor.
inline Fixed anticoin_value(const Vault& v, Fixed current_price, Fixed epsilon_floor = Fixed::quantum()) {
  require(current_price.is_positive(), errc::domain, "current price must be positive");
  const Fixed p = max(current_price, epsilon_floor);
  if (p >= v.price_at_creation) return Fixed{};
  return Fixed::from_long_double(std::log(v.price_at_creation.to_long_double() / p.to_long_double()));
}

/// k * H^lambda
inline Fixed whale_penalty(Fixed holdings, Fixed k, Fixed lambda) {
  require(!holdings.is_negative(), errc::parameter, "holdings must be non-negative");
  if (holdings.is_zero() || k.is_zero()) return Fixed{};
  const long double v =
      k.to_long_double() * std::exp(lambda.to_long_double() * std::log(holdings.to_long_double()));
  if (!std::isfinite(v)) fail(errc::range, "whale penalty overflow");
  return Fixed::from_long_double(v);
}

/// sum_{i=1..n} (H/n)(gamma + dgamma*i) = H*gamma + H*dgamma*(n+1)/2,
/// evaluated exactly and rounded once.
inline Fixed cumulative_penalty(Fixed h_total, std::uint64_t n, Fixed gamma, Fixed delta_gamma) {
  require(n >= 1, errc::parameter, "withdrawal count must be at least 1");
  require(!h_total.is_negative(), errc::parameter, "holdings must be non-negative");
  using ::rugsim::detail::to_wide;
  const wide_int h = to_wide(h_total.raw());
  const wide_int num = h * to_wide(gamma.raw()) * 2 + h * to_wide(delta_gamma.raw()) * wide_int(n + 1);
  const wide_int den = wide_int(2) * wide_int(1'000'000'000);
  return Fixed::from_raw(
      ::rugsim::detail::from_wide(::rugsim::detail::div_round<wide_int>(num, den, rounding::half_even)));
}

struct WithdrawQuote {
  Fixed owner_holdings{};  // H, aggregated over the beneficial owner
  std::uint64_t prior_withdrawals = 0;
  Fixed whale_rate{};      // min(0.99, k * (H / H_ref)^lambda)
  Fixed escalation_rate{}; // gamma + dgamma * (n + 1)
  Fixed rate{};
  Fixed penalty{};
  Fixed returned{};
};

/// Penalty rate charged on a withdrawal: the escalating per-withdrawal rate
/// for the owner's (n+1)-th withdrawal plus a whale surcharge normalized by
/// the vault's total deposits.
inline WithdrawQuote quote_withdrawal(const Vault& v, Fixed amount, Fixed owner_holdings,
                                      std::uint64_t prior_withdrawals) {
  WithdrawQuote q;
  q.owner_holdings = owner_holdings;
  q.prior_withdrawals = prior_withdrawals;
  if (v.total_deposited.is_positive() && owner_holdings.is_positive()) {
    const Fixed relative = owner_holdings / v.total_deposited;
    q.whale_rate = min(Fixed::parse("0.99"), whale_penalty(relative, v.params.penalty_k, v.params.penalty_lambda));
  }
  q.escalation_rate =
      v.params.gamma_base + v.params.delta_gamma * static_cast<std::int64_t>(prior_withdrawals + 1);
  q.rate = q.escalation_rate + q.whale_rate;
  q.penalty = amount * q.rate;
  q.returned = amount - q.penalty;
  return q;
}

struct DepositResult {
  Fixed minted{};
  Receipt receipt;
  RewardEvent reward;
};

struct BurnResult {
  Fixed supply_after{};
  RewardEvent reward;
};

struct WithdrawResult {
  Fixed returned{};
  Fixed penalty{};
  WithdrawQuote quote;
};

struct CreateVaultArgs {
  VaultId id{};
  TokenId rugged_token{};
  TokenId anticoin{};
  AccountId custody{};
  AccountId penalty_sink{};
  VaultParams params;
  Fixed current_price{};
};

/// Per-chain vault registry and the withdrawal ledger keyed by beneficial
/// owner. Token movements go through the shared Ledger.
class VaultRegistry {
 public:
  explicit VaultRegistry(ChainId chain = {}) : chain_(chain) {}

  ChainId chain() const { return chain_; }

  const Vault& create_vault(const CreateVaultArgs& a) {
    validate(a.params);
    require(a.current_price.is_positive(), errc::parameter, "creation price must be positive");
    require(!by_token_.contains(a.rugged_token), errc::exists, "vault already exists for token on this chain");
    require(!vaults_.contains(a.id), errc::exists, "vault id already registered");
    Vault v;
    v.id = a.id;
    v.chain = chain_;
    v.rugged_token = a.rugged_token;
    v.anticoin = a.anticoin;
    v.params = a.params;
    v.price_at_creation = a.current_price;
    v.custody = a.custody;
    v.penalty_sink = a.penalty_sink;
    by_token_.emplace(a.rugged_token, a.id);
    return vaults_.emplace(a.id, std::move(v)).first->second;
  }

  const Vault& get(VaultId id) const {
    auto it = vaults_.find(id);
    require(it != vaults_.end(), errc::not_found, "unknown vault");
    return it->second;
  }

  const Vault* find_by_token(TokenId rugged) const {
    auto it = by_token_.find(rugged);
    return it == by_token_.end() ? nullptr : &vaults_.at(it->second);
  }

  const std::map<VaultId, Vault>& vaults() const { return vaults_; }

  std::uint64_t withdrawals(VaultId v, OwnerId owner) const {
    auto it = withdrawal_counts_.find({v, owner});
    return it == withdrawal_counts_.end() ? 0 : it->second;
  }

  const std::map<std::pair<VaultId, OwnerId>, std::uint64_t>& withdrawal_ledger() const { return withdrawal_counts_; }

  /// Mints anticoins 1:1 for `amount` rugged tokens and records a receipt.
  DepositResult deposit(Ledger& ledger, VaultId id, AccountId user, Fixed amount) {
    Vault& v = mut(id);
    require(amount.is_positive(), errc::dust, "deposit amount must be positive");
    require(ledger.balance(user, v.rugged_token) >= amount, errc::balance, "insufficient rugged-token balance");
    ledger.transfer(user, v.custody, v.rugged_token, amount);
    ledger.mint(user, v.anticoin, amount);
    v.total_deposited += amount;

    Receipt r{v.id, user, v.params.receipt_kind, amount, std::nullopt, std::nullopt};
    if (v.params.receipt_kind != ReceiptKind::Fungible) r.nft_serial = v.next_serial++;
    if (v.params.receipt_kind == ReceiptKind::Refungible) r.rft_shares = amount;
    v.receipts.push_back(r);

    RewardEvent reward{RewardEvent::Kind::Deposit, v.id, v.chain, user, amount,
                       tokenomics::deposit_reward(amount, v.params.omega)};
    return {amount, r, reward};
  }

  /// Burns anticoins; the backing rugged tokens stay in custody for good.
  BurnResult burn_anticoins(Ledger& ledger, VaultId id, AccountId user, Fixed amount) {
    Vault& v = mut(id);
    require(amount.is_positive(), errc::dust, "burn amount must be positive");
    require(ledger.balance(user, v.anticoin) >= amount, errc::balance, "insufficient anticoin balance");
    ledger.burn(user, v.anticoin, amount);
    v.total_burned += amount;
    RewardEvent reward{RewardEvent::Kind::Burn, v.id, v.chain, user, amount,
                       tokenomics::burn_reward(amount, v.params.theta)};
    return {v.anticoin_supply(), reward};
  }

  /// Redeems anticoins for rugged tokens minus the withdrawal penalty.
  /// Refused without any state change when the penalty would consume the
  /// whole amount.
  WithdrawResult withdraw(Ledger& ledger, VaultId id, AccountId account, Fixed amount) {
    Vault& v = mut(id);
    require(amount.is_positive(), errc::dust, "withdrawal amount must be positive");
    require(ledger.balance(account, v.anticoin) >= amount, errc::balance, "insufficient anticoin balance");
    require(ledger.balance(v.custody, v.rugged_token) >= amount, errc::balance, "vault holds too few rugged tokens");
    const WithdrawQuote q = quote_withdrawal(v, amount, ledger.owner_balance(account.owner, v.anticoin),
                                             withdrawals(id, account.owner));
    require(q.penalty < amount, errc::confiscatory, "penalty would consume the full withdrawal");
    ledger.burn(account, v.anticoin, amount);
    ledger.transfer(v.custody, account, v.rugged_token, q.returned);
    ledger.transfer(v.custody, v.penalty_sink, v.rugged_token, q.penalty);
    v.total_withdrawn += amount;
    v.total_penalties += q.penalty;
    ++withdrawal_counts_[{id, account.owner}];
    return {q.returned, q.penalty, q};
  }

 private:
  Vault& mut(VaultId id) {
    auto it = vaults_.find(id);
    require(it != vaults_.end(), errc::not_found, "unknown vault");
    return it->second;
  }

  ChainId chain_;
  std::map<VaultId, Vault> vaults_;
  std::map<TokenId, VaultId> by_token_;
  std::map<std::pair<VaultId, OwnerId>, std::uint64_t> withdrawal_counts_;
};

}  // namespace rugsim::vault
