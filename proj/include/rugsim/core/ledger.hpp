#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rugsim/core/error.hpp"
#include "rugsim/core/fixed.hpp"
#include "rugsim/core/ids.hpp"

namespace rugsim {

struct LedgerDelta {
  AccountId account;
  TokenId token;
  Fixed amount;  // signed change
};

struct SupplyDelta {
  TokenId token;
  Fixed amount;  // +mint / -burn
};

struct LedgerJournal {
  std::vector<LedgerDelta> balances;
  std::vector<SupplyDelta> supply;

  bool empty() const { return balances.empty() && supply.empty(); }
};

/// Token balances for every account, including system accounts (escrows,
/// pool reserves, treasuries). The only mutations are transfer, mint and
/// burn, so per token the sum of balances always equals minted minus burned.
/// Every change is journaled so the harness can attach it to trace events.
class Ledger {
 public:
  AccountId open_account(OwnerId owner) {
    AccountId id{static_cast<std::uint32_t>(accounts_.size() + 1), owner};
    accounts_.push_back(id);
    by_owner_[owner.value].push_back(id);
    return id;
  }

  /// Account that is its own beneficial owner. Self-owner ids live in the
  /// upper half of the id space, away from explicitly assigned owners.
  AccountId open_account() {
    const auto next = static_cast<std::uint32_t>(accounts_.size() + 1);
    return open_account(OwnerId{kSelfOwnerBit | next});
  }

  static constexpr std::uint32_t kSelfOwnerBit = 0x80000000U;

  const std::vector<AccountId>& accounts() const { return accounts_; }

  AccountId account(std::uint32_t value) const {
    require(value >= 1 && value <= accounts_.size(), errc::not_found, "unknown account");
    return accounts_[value - 1];
  }

  Fixed balance(AccountId a, TokenId t) const {
    auto it = balances_.find(key(a, t));
    return it == balances_.end() ? Fixed{} : it->second;
  }

  /// Sum over every account sharing `owner`.
  Fixed owner_balance(OwnerId owner, TokenId t) const {
    Fixed total;
    auto it = by_owner_.find(owner.value);
    if (it == by_owner_.end()) return total;
    for (AccountId a : it->second) total += balance(a, t);
    return total;
  }

  Fixed supply(TokenId t) const {
    auto it = supply_.find(t.value);
    return it == supply_.end() ? Fixed{} : it->second;
  }

  void transfer(AccountId from, AccountId to, TokenId t, Fixed amount) {
    require(!amount.is_negative(), errc::parameter, "negative transfer");
    if (amount.is_zero() || from == to) return;
    require(balance(from, t) >= amount, errc::balance, "insufficient balance for transfer of " + amount.str());
    adjust(from, t, -amount);
    adjust(to, t, amount);
  }

  void mint(AccountId to, TokenId t, Fixed amount) {
    require(!amount.is_negative(), errc::parameter, "negative mint");
    if (amount.is_zero()) return;
    supply_[t.value] += amount;
    journal_.supply.push_back({t, amount});
    adjust(to, t, amount);
  }

  void burn(AccountId from, TokenId t, Fixed amount) {
    require(!amount.is_negative(), errc::parameter, "negative burn");
    if (amount.is_zero()) return;
    require(balance(from, t) >= amount, errc::balance, "insufficient balance for burn of " + amount.str());
    supply_[t.value] -= amount;
    journal_.supply.push_back({t, -amount});
    adjust(from, t, -amount);
  }

  LedgerJournal take_journal() { return std::exchange(journal_, {}); }

  struct Checkpoint {
    std::size_t balances = 0;
    std::size_t supply = 0;
  };

  /// Position in the journal since the last take_journal().
  Checkpoint checkpoint() const { return {journal_.balances.size(), journal_.supply.size()}; }

  /// Undoes every change journaled after `cp`.
  void rollback(Checkpoint cp) {
    require(cp.balances <= journal_.balances.size() && cp.supply <= journal_.supply.size(), errc::state,
            "checkpoint is newer than the journal");
    while (journal_.balances.size() > cp.balances) {
      const auto& d = journal_.balances.back();
      balances_[key(d.account, d.token)] -= d.amount;
      journal_.balances.pop_back();
    }
    while (journal_.supply.size() > cp.supply) {
      const auto& d = journal_.supply.back();
      supply_[d.token.value] -= d.amount;
      journal_.supply.pop_back();
    }
  }

  /// Per-token check that balances sum to supply.
  bool conserved() const {
    std::unordered_map<std::uint32_t, Fixed> sums;
    for (const auto& [k, v] : balances_) sums[static_cast<std::uint32_t>(k & 0xffffffffU)] += v;
    for (const auto& [t, s] : supply_)
      if (sums[t] != s) return false;
    for (const auto& [t, s] : sums)
      if (s != supply(TokenId{t})) return false;
    return true;
  }

  /// Non-zero balances ordered by (account, token).
  std::vector<std::pair<std::pair<AccountId, TokenId>, Fixed>> snapshot() const {
    std::map<std::uint64_t, Fixed> sorted;
    for (const auto& [k, v] : balances_)
      if (!v.is_zero()) sorted.emplace(k, v);
    std::vector<std::pair<std::pair<AccountId, TokenId>, Fixed>> out;
    out.reserve(sorted.size());
    for (const auto& [k, v] : sorted)
      out.push_back({{account(static_cast<std::uint32_t>(k >> 32)), TokenId{static_cast<std::uint32_t>(k)}}, v});
    return out;
  }

 private:
  static std::uint64_t key(AccountId a, TokenId t) { return (std::uint64_t{a.value} << 32) | t.value; }

  void adjust(AccountId a, TokenId t, Fixed delta) {
    balances_[key(a, t)] += delta;
    journal_.balances.push_back({a, t, delta});
  }

  std::vector<AccountId> accounts_;
  std::unordered_map<std::uint32_t, std::vector<AccountId>> by_owner_;
  std::unordered_map<std::uint64_t, Fixed> balances_;
  std::unordered_map<std::uint32_t, Fixed> supply_;
  LedgerJournal journal_;
};

}  // namespace rugsim
