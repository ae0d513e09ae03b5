#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rugsim/core/error.hpp"
#include "rugsim/core/fixed.hpp"
#include "rugsim/core/ids.hpp"
#include "rugsim/core/ledger.hpp"

// Case machinery shared by the rug-claim and insurance games: deposit-weighted
// votes, per-case escrow accounting and exact pro-rata splits.
namespace rugsim::dispute {

enum class Side { For, Against };

inline std::string_view to_string(Side s) { return s == Side::For ? "for" : "against"; }

struct Vote {
  AccountId voter{};
  Fixed deposit{};
  Side side = Side::For;
};

struct Tally {
  Fixed for_mass{};
  Fixed against_mass{};

  /// Strict majority of deposit mass wins; ties and empty votes go Against.
  Side winner() const { return for_mass > against_mass ? Side::For : Side::Against; }
};

class VoteBook {
 public:
  void add(AccountId voter, Fixed deposit, Side side) {
    require(!has_voted(voter), errc::conflict, "account has already voted");
    votes_.push_back({voter, deposit, side});
  }

  bool has_voted(AccountId voter) const {
    return std::any_of(votes_.begin(), votes_.end(), [&](const Vote& v) { return v.voter == voter; });
  }

  Tally tally() const {
    Tally t;
    for (const auto& v : votes_) (v.side == Side::For ? t.for_mass : t.against_mass) += v.deposit;
    return t;
  }

  const std::vector<Vote>& votes() const { return votes_; }
  void clear() { votes_.clear(); }

 private:
  std::vector<Vote> votes_;
};

struct Payout {
  AccountId to{};
  Fixed amount{};
  std::string reason;
};

/// Escrow bookkeeping for one case. Funds live in a shared escrow account;
/// this tracks what the case put in and took out so both can be checked.
class CaseEscrow {
 public:
  CaseEscrow() = default;
  CaseEscrow(AccountId account, TokenId token) : account_(account), token_(token) {}

  void take(Ledger& ledger, AccountId from, Fixed amount) {
    require(ledger.balance(from, token_) >= amount, errc::balance, "insufficient balance for bond or deposit");
    ledger.transfer(from, account_, token_, amount);
    in_ += amount;
  }

  void pay(Ledger& ledger, AccountId to, Fixed amount, std::string reason, std::vector<Payout>& log) {
    if (!amount.is_positive()) return;
    require(amount <= held(), errc::balance, "case escrow overdrawn");
    ledger.transfer(account_, to, token_, amount);
    out_ += amount;
    log.push_back({to, amount, std::move(reason)});
  }

  /// Reassigns funds between two cases sharing the escrow account.
  void move_to(CaseEscrow& dst, Fixed amount) {
    require(dst.account_ == account_ && dst.token_ == token_, errc::parameter, "cases do not share an escrow");
    require(!amount.is_negative() && amount <= held(), errc::balance, "case escrow overdrawn");
    out_ += amount;
    dst.in_ += amount;
  }

  Fixed in() const { return in_; }
  Fixed out() const { return out_; }
  Fixed held() const { return in_ - out_; }
  TokenId token() const { return token_; }

 private:
  AccountId account_{};
  TokenId token_{};
  Fixed in_{};
  Fixed out_{};
};

struct Weighted {
  AccountId account{};
  Fixed weight{};
};

struct Share {
  AccountId account{};
  Fixed amount{};
};

/// Floor shares of `total` by weight; the rounding remainder goes to
/// `remainder_to`. The shares always sum to `total` exactly.
inline std::vector<Share> pro_rata(Fixed total, const std::vector<Weighted>& weights, AccountId remainder_to) {
  std::vector<Share> out;
  Fixed weight_sum;
  for (const auto& w : weights) weight_sum += w.weight;
  Fixed given;
  if (weight_sum.is_positive()) {
    for (const auto& w : weights) {
      const Fixed s = mul_div(total, w.weight, weight_sum, rounding::floor);
      out.push_back({w.account, s});
      given += s;
    }
  }
  const Fixed rest = total - given;
  if (rest.is_positive()) {
    auto it = std::find_if(out.begin(), out.end(), [&](const Share& s) { return s.account == remainder_to; });
    if (it != out.end())
      it->amount += rest;
    else
      out.push_back({remainder_to, rest});
  }
  return out;
}

/// Smallest account id among the weights; used when no party is designated.
inline AccountId lowest_account(const std::vector<Weighted>& weights) {
  require(!weights.empty(), errc::parameter, "no accounts to choose from");
  return std::min_element(weights.begin(), weights.end(),
                          [](const Weighted& a, const Weighted& b) { return a.account < b.account; })
      ->account;
}

inline std::vector<Weighted> voters_on(const VoteBook& book, Side side) {
  std::vector<Weighted> out;
  for (const auto& v : book.votes())
    if (v.side == side) out.push_back({v.voter, v.deposit});
  return out;
}

inline void pay_shares(Ledger& ledger, CaseEscrow& escrow, const std::vector<Share>& shares, std::string_view reason,
                       std::vector<Payout>& log) {
  for (const auto& s : shares) escrow.pay(ledger, s.account, s.amount, std::string(reason), log);
}

}  // namespace rugsim::dispute
