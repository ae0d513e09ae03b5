#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "rugsim/core/error.hpp"
#include "rugsim/core/fixed.hpp"
#include "rugsim/core/ids.hpp"
#include "rugsim/core/ledger.hpp"
#include "rugsim/dispute.hpp"

namespace rugsim::insurance {

using dispute::Side;  // For = approve the claim

enum class PolicyStatus { Active, Claimed, Paid, Expired };
enum class ClaimStatus { Open, Disputed, Tallied, Approved, Rejected };

inline std::string_view to_string(PolicyStatus s) {
  switch (s) {
    case PolicyStatus::Active: return "active";
    case PolicyStatus::Claimed: return "claimed";
    case PolicyStatus::Paid: return "paid";
    case PolicyStatus::Expired: return "expired";
  }
  return "?";
}

inline std::string_view to_string(ClaimStatus s) {
  switch (s) {
    case ClaimStatus::Open: return "open";
    case ClaimStatus::Disputed: return "disputed";
    case ClaimStatus::Tallied: return "tallied";
    case ClaimStatus::Approved: return "approved";
    case ClaimStatus::Rejected: return "rejected";
  }
  return "?";
}

struct InsuranceParams {
  Fixed alpha_comp = Fixed::parse("0.2");
  Fixed gamma_pen = Fixed::parse("0.5");
  Fixed escalation_bond_multiplier = Fixed::from_int(2);
  int max_escalations = 2;
  Fixed x_min = Fixed::parse("0.01");
  Fixed z_min = Fixed::from_int(1);  // minimum vote deposit
  std::uint64_t tau_challenge = 10;
  std::uint64_t tau_vote = 10;

  void validate() const {
    const Fixed one = Fixed::from_int(1);
    for (Fixed f : {alpha_comp, gamma_pen, x_min})
      require(!f.is_negative() && f <= one, errc::parameter, "insurance fractions must be in [0, 1]");
    require(escalation_bond_multiplier > one, errc::parameter, "escalation multiplier must exceed 1");
    require(max_escalations >= 0, errc::parameter, "max escalations must be non-negative");
    require(z_min.is_positive() && tau_challenge > 0 && tau_vote > 0, errc::parameter,
            "vote minimum and windows must be positive");
  }
};

struct Policy {
  PolicyId id{};
  AccountId insurer{};
  AccountId insured{};
  TokenId token{};
  Fixed insured_value{};
  Fixed insurer_bond{};
  std::uint64_t issued_at = 0;
  std::uint64_t expires_at = 0;
  PolicyStatus status = PolicyStatus::Active;
  dispute::CaseEscrow escrow;
};

struct Joiner {
  AccountId account{};
  Fixed loss{};
  Fixed bond{};
};

struct DisputeInfo {
  AccountId challenger{};
  Fixed bond{};
};

struct EscalationBond {
  int level = 0;
  AccountId party{};
  Fixed bond{};
};

struct InsuranceClaim {
  CaseId id{};
  PolicyId policy{};
  AccountId claimant{};
  Fixed claimed_loss{};
  Fixed claim_bond{};
  std::vector<Joiner> joiners;
  std::optional<DisputeInfo> dispute;
  dispute::VoteBook votes;  // current level only
  int level = 0;
  std::vector<EscalationBond> escalations;
  std::uint64_t opened_at = 0;
  std::uint64_t challenge_end = 0;
  std::uint64_t vote_end = 0;
  std::uint64_t escalation_end = 0;
  std::optional<Side> provisional;
  ClaimStatus status = ClaimStatus::Open;
  dispute::CaseEscrow escrow;

  Fixed pooled_bonds() const {
    Fixed total = claim_bond;
    for (const auto& j : joiners) total += j.bond;
    return total;
  }
};

struct Resolution {
  CaseId claim{};
  ClaimStatus outcome = ClaimStatus::Open;
  dispute::Tally tally;
  Fixed compensation{};
  Fixed penalty{};
  Fixed escalation_slashed{};
  std::vector<dispute::Payout> payouts;
};

/// Policies and claims. Each policy's bond and each claim's bonds and
/// deposits are tracked as separate cases over one escrow account.
class InsuranceBook {
 public:
  explicit InsuranceBook(AccountId escrow, InsuranceParams params = {}) : escrow_(escrow), params_(params) {
    params_.validate();
  }

  const InsuranceParams& params() const { return params_; }
  const std::vector<Policy>& policies() const { return policies_; }
  const std::vector<InsuranceClaim>& claims() const { return claims_; }

  const Policy& policy(PolicyId id) const {
    require(id.value >= 1 && id.value <= policies_.size(), errc::not_found, "unknown policy");
    return policies_[id.value - 1];
  }
  const InsuranceClaim& claim(CaseId id) const {
    require(id.value >= 1 && id.value <= claims_.size(), errc::not_found, "unknown claim");
    return claims_[id.value - 1];
  }

  const Policy& issue_policy(Ledger& ledger, AccountId insurer, AccountId insured, TokenId token,
                             Fixed insured_value, Fixed bond_fraction, std::uint64_t duration, std::uint64_t now) {
    require(insured_value.is_positive(), errc::parameter, "insured value must be positive");
    require(duration > 0, errc::parameter, "policy duration must be positive");
    require(bond_fraction >= params_.x_min && bond_fraction <= Fixed::from_int(1), errc::nontrivial_bond,
            "insurer bond fraction below the required minimum");
    Policy p;
    p.id = PolicyId{static_cast<std::uint32_t>(policies_.size() + 1)};
    p.insurer = insurer;
    p.insured = insured;
    p.token = token;
    p.insured_value = insured_value;
    p.insurer_bond = insured_value * bond_fraction;
    p.issued_at = now;
    p.expires_at = now + duration;
    p.escrow = dispute::CaseEscrow(escrow_, token);
    p.escrow.take(ledger, insurer, p.insurer_bond);
    policies_.push_back(std::move(p));
    return policies_.back();
  }

  /// `claimed_loss` defaults to the insured value.
  const InsuranceClaim& submit_claim(Ledger& ledger, PolicyId policy_id, AccountId claimant, Fixed claim_fraction,
                                     std::uint64_t now, std::optional<Fixed> claimed_loss = std::nullopt) {
    auto& p = mut_policy(policy_id);
    require(p.status == PolicyStatus::Active, errc::state, "policy is not active");
    require(now < p.expires_at, errc::late, "policy has expired");
    require(claim_fraction.is_positive() && claim_fraction <= Fixed::from_int(1), errc::parameter,
            "claim bond fraction must be in (0, 1]");
    InsuranceClaim c;
    c.id = CaseId{static_cast<std::uint32_t>(claims_.size() + 1)};
    c.policy = policy_id;
    c.claimant = claimant;
    c.claimed_loss = claimed_loss.value_or(p.insured_value);
    require(c.claimed_loss.is_positive(), errc::parameter, "claimed loss must be positive");
    c.claim_bond = p.insured_value * claim_fraction;
    c.opened_at = now;
    c.challenge_end = now + params_.tau_challenge;
    c.escrow = dispute::CaseEscrow(escrow_, p.token);
    c.escrow.take(ledger, claimant, c.claim_bond);
    p.status = PolicyStatus::Claimed;
    claims_.push_back(std::move(c));
    return claims_.back();
  }

  void join_claim(Ledger& ledger, CaseId claim_id, AccountId account, Fixed loss, Fixed join_fraction,
                  std::uint64_t now) {
    auto& c = mut_claim(claim_id);
    require(c.status == ClaimStatus::Open, errc::state, "claim is no longer joinable");
    require(now < c.challenge_end, errc::late, "join window has closed");
    require(loss.is_positive(), errc::parameter, "claimed loss must be positive");
    require(join_fraction.is_positive() && join_fraction <= Fixed::from_int(1), errc::parameter,
            "join bond fraction must be in (0, 1]");
    require(account != c.claimant && std::none_of(c.joiners.begin(), c.joiners.end(),
                                                  [&](const Joiner& j) { return j.account == account; }),
            errc::conflict, "account is already on the claimant side");
    const Fixed bond = policy(c.policy).insured_value * join_fraction;
    c.escrow.take(ledger, account, bond);
    c.joiners.push_back({account, loss, bond});
  }

  void dispute_claim(Ledger& ledger, CaseId claim_id, AccountId challenger, Fixed dispute_fraction,
                     std::uint64_t now) {
    auto& c = mut_claim(claim_id);
    require(!c.dispute.has_value(), errc::conflict, "claim is already disputed");
    require(c.status == ClaimStatus::Open, errc::state, "claim is not open");
    require(now < c.challenge_end, errc::late, "challenge window has closed");
    require(dispute_fraction.is_positive() && dispute_fraction <= Fixed::from_int(1), errc::parameter,
            "dispute bond fraction must be in (0, 1]");
    require(!on_claimant_side(c, challenger), errc::conflict, "claimant side cannot dispute its own claim");
    const Fixed bond = policy(c.policy).insured_value * dispute_fraction;
    c.escrow.take(ledger, challenger, bond);
    c.dispute = DisputeInfo{challenger, bond};
    c.status = ClaimStatus::Disputed;
    c.vote_end = now + params_.tau_vote;
  }

  void cast_vote(Ledger& ledger, CaseId claim_id, AccountId voter, Fixed deposit, Side side, std::uint64_t now) {
    auto& c = mut_claim(claim_id);
    require(c.status == ClaimStatus::Disputed, errc::state, "claim is not in a voting round");
    require(now < c.vote_end, errc::late, "voting window has closed");
    require(deposit >= params_.z_min, errc::parameter, "vote deposit below minimum");
    require(!c.votes.has_voted(voter), errc::conflict, "account has already voted");
    c.escrow.take(ledger, voter, deposit);
    c.votes.add(voter, deposit, side);
  }

  /// Closes a voting round with a provisional outcome that becomes final
  /// unless the losing party escalates within the challenge window.
  Side tally(CaseId claim_id, std::uint64_t now) {
    auto& c = mut_claim(claim_id);
    require(c.status == ClaimStatus::Disputed, errc::state, "claim is not in a voting round");
    require(now >= c.vote_end, errc::early, "voting window still open");
    c.provisional = c.votes.tally().winner();
    c.status = ClaimStatus::Tallied;
    c.escalation_end = now + params_.tau_challenge;
    return *c.provisional;
  }

  /// Losing party reopens voting one level up by posting its prior bond
  /// times the multiplier. Votes of the closed round are refunded.
  Fixed escalate(Ledger& ledger, CaseId claim_id, AccountId party, std::uint64_t now,
                 std::vector<dispute::Payout>& log) {
    auto& c = mut_claim(claim_id);
    require(c.status == ClaimStatus::Tallied, errc::state, "no provisional outcome to escalate");
    const bool is_claimant = party == c.claimant;
    const bool is_challenger = c.dispute && party == c.dispute->challenger;
    require(is_claimant || is_challenger, errc::not_party, "only the claimant or challenger may escalate");
    const Side party_side = is_claimant ? Side::For : Side::Against;
    require(party_side != *c.provisional, errc::not_party, "only the losing party may escalate");
    require(c.level < params_.max_escalations, errc::final_level, "maximum escalation level reached");
    require(now < c.escalation_end, errc::late, "escalation window has closed");
    const Fixed bond = prior_bond(c, party) * params_.escalation_bond_multiplier;
    c.escrow.take(ledger, party, bond);
    for (const auto& v : c.votes.votes()) c.escrow.pay(ledger, v.voter, v.deposit, "vote_deposit_return", log);
    c.votes.clear();
    ++c.level;
    c.escalations.push_back({c.level, party, bond});
    c.provisional.reset();
    c.status = ClaimStatus::Disputed;
    c.vote_end = now + params_.tau_vote;
    return bond;
  }

  Resolution resolve_insurance(Ledger& ledger, CaseId claim_id, std::uint64_t now) {
    auto& c = mut_claim(claim_id);
    Side outcome = Side::For;
    if (c.status == ClaimStatus::Open) {
      require(now >= c.challenge_end, errc::early, "challenge window still open");
    } else if (c.status == ClaimStatus::Tallied) {
      require(now >= c.escalation_end, errc::early, "escalation window still open");
      outcome = *c.provisional;
    } else if (c.status == ClaimStatus::Disputed) {
      fail(errc::early, "voting round still in progress");
    } else {
      fail(errc::state, "claim already resolved");
    }
    auto& p = mut_policy(c.policy);
    Resolution r;
    r.claim = c.id;
    r.tally = c.votes.tally();
    if (outcome == Side::For)
      approve(ledger, c, p, r);
    else
      reject(ledger, c, p, r);
    settle_escalations(ledger, c, outcome, r);
    for (const auto& v : c.votes.votes()) c.escrow.pay(ledger, v.voter, v.deposit, "vote_deposit_return", r.payouts);
    return r;
  }

  /// Returns the bond of an expired policy with no pending claim.
  void expire(Ledger& ledger, PolicyId id, std::uint64_t now, std::vector<dispute::Payout>& log) {
    auto& p = mut_policy(id);
    require(p.status == PolicyStatus::Active, errc::state, "policy is not active");
    require(now >= p.expires_at, errc::early, "policy has not expired");
    p.escrow.pay(ledger, p.insurer, p.escrow.held(), "insurer_bond_release", log);
    p.status = PolicyStatus::Expired;
  }

 private:
  static bool on_claimant_side(const InsuranceClaim& c, AccountId a) {
    return a == c.claimant ||
           std::any_of(c.joiners.begin(), c.joiners.end(), [&](const Joiner& j) { return j.account == a; });
  }

  Fixed prior_bond(const InsuranceClaim& c, AccountId party) const {
    for (auto it = c.escalations.rbegin(); it != c.escalations.rend(); ++it)
      if (it->party == party) return it->bond;
    return party == c.claimant ? c.claim_bond : c.dispute->bond;
  }

  std::vector<dispute::Weighted> claimant_side(const InsuranceClaim& c) const {
    std::vector<dispute::Weighted> out{{c.claimant, c.claimed_loss}};
    for (const auto& j : c.joiners) out.push_back({j.account, j.loss});
    return out;
  }

  /// Pays I_v from the insurer's free balance, topping up from the bond when
  /// that falls short, then alpha of the bond on top.
  void approve(Ledger& ledger, InsuranceClaim& c, Policy& p, Resolution& r) {
    r.outcome = ClaimStatus::Approved;
    const auto side = claimant_side(c);
    const Fixed bonus = p.insurer_bond * params_.alpha_comp;
    const Fixed from_free = min(p.insured_value, ledger.balance(p.insurer, p.token));
    const Fixed from_bond = min(p.insured_value - from_free + bonus, p.escrow.held());
    r.compensation = from_free + from_bond;
    // The insurer's free funds pass through the claim escrow so the split
    // below is paid from one place.
    c.escrow.take(ledger, p.insurer, from_free);
    p.escrow.move_to(c.escrow, from_bond);
    dispute::pay_shares(ledger, c.escrow, dispute::pro_rata(r.compensation, side, c.claimant), "compensation",
                        r.payouts);
    c.escrow.pay(ledger, c.claimant, c.claim_bond, "claim_bond_return", r.payouts);
    for (const auto& j : c.joiners) c.escrow.pay(ledger, j.account, j.bond, "join_bond_return", r.payouts);
    if (c.dispute) {
      r.penalty = c.dispute->bond * params_.gamma_pen;
      dispute::pay_shares(ledger, c.escrow, dispute::pro_rata(r.penalty, side, c.claimant), "dispute_bond_slash",
                          r.payouts);
      c.escrow.pay(ledger, c.dispute->challenger, c.dispute->bond - r.penalty, "dispute_bond_remainder", r.payouts);
    }
    p.escrow.pay(ledger, p.insurer, p.escrow.held(), "insurer_bond_remainder", r.payouts);
    p.status = PolicyStatus::Paid;
    c.status = ClaimStatus::Approved;
  }

  void reject(Ledger& ledger, InsuranceClaim& c, Policy& p, Resolution& r) {
    r.outcome = ClaimStatus::Rejected;
    const AccountId challenger = c.dispute->challenger;
    std::vector<dispute::Weighted> winners{{challenger, c.dispute->bond}};
    for (const auto& w : dispute::voters_on(c.votes, Side::Against)) winners.push_back(w);
    const Fixed claim_slash = c.claim_bond * params_.gamma_pen;
    r.penalty = claim_slash;
    c.escrow.pay(ledger, c.claimant, c.claim_bond - claim_slash, "claim_bond_remainder", r.payouts);
    for (const auto& j : c.joiners) {
      const Fixed s = j.bond * params_.gamma_pen;
      r.penalty += s;
      c.escrow.pay(ledger, j.account, j.bond - s, "join_bond_remainder", r.payouts);
    }
    dispute::pay_shares(ledger, c.escrow, dispute::pro_rata(r.penalty, winners, challenger), "claim_penalty",
                        r.payouts);
    c.escrow.pay(ledger, challenger, c.dispute->bond, "dispute_bond_return", r.payouts);
    p.status = PolicyStatus::Active;
    c.status = ClaimStatus::Rejected;
  }

  /// Winner's escalation bonds come back; the final loser forfeits gamma of
  /// each to the other party.
  void settle_escalations(Ledger& ledger, InsuranceClaim& c, Side outcome, Resolution& r) {
    const AccountId claimant_party = c.claimant;
    for (const auto& e : c.escalations) {
      const Side e_side = e.party == claimant_party ? Side::For : Side::Against;
      if (e_side == outcome) {
        c.escrow.pay(ledger, e.party, e.bond, "escalation_bond_return", r.payouts);
        continue;
      }
      const Fixed s = e.bond * params_.gamma_pen;
      const AccountId other = e_side == Side::For ? c.dispute->challenger : c.claimant;
      r.escalation_slashed += s;
      c.escrow.pay(ledger, other, s, "escalation_bond_slash", r.payouts);
      c.escrow.pay(ledger, e.party, e.bond - s, "escalation_bond_remainder", r.payouts);
    }
  }

  Policy& mut_policy(PolicyId id) {
    require(id.value >= 1 && id.value <= policies_.size(), errc::not_found, "unknown policy");
    return policies_[id.value - 1];
  }
  InsuranceClaim& mut_claim(CaseId id) {
    require(id.value >= 1 && id.value <= claims_.size(), errc::not_found, "unknown claim");
    return claims_[id.value - 1];
  }

  AccountId escrow_;
  InsuranceParams params_;
  std::vector<Policy> policies_;
  std::vector<InsuranceClaim> claims_;
};

}  // namespace rugsim::insurance
