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

namespace rugsim::rugproof {

using dispute::Side;  // For = Rugging, Against = NotRugging

enum class IssuanceStatus { Active, Slashed, Released };
enum class ClaimStatus { Voting, UpheldRug, RejectedFraud };

inline std::string_view to_string(IssuanceStatus s) {
  switch (s) {
    case IssuanceStatus::Active: return "active";
    case IssuanceStatus::Slashed: return "slashed";
    case IssuanceStatus::Released: return "released";
  }
  return "?";
}

inline std::string_view to_string(ClaimStatus s) {
  switch (s) {
    case ClaimStatus::Voting: return "voting";
    case ClaimStatus::UpheldRug: return "upheld_rug";
    case ClaimStatus::RejectedFraud: return "rejected_fraud";
  }
  return "?";
}

struct SlashParams {
  Fixed alpha_slash = Fixed::parse("0.5");
  Fixed gamma_slash = Fixed::parse("0.5");
  Fixed claimant_share = Fixed::parse("0.5");
  Fixed z_min = Fixed::from_int(1);
  std::uint64_t challenge_blocks = 10;
  Fixed x_min = Fixed::parse("0.01");
  bool forfeit_losing_deposits = false;

  void validate() const {
    const Fixed one = Fixed::from_int(1);
    for (Fixed f : {alpha_slash, gamma_slash, claimant_share, x_min})
      require(!f.is_negative() && f <= one, errc::parameter, "slash fractions must be in [0, 1]");
    require(z_min.is_positive(), errc::parameter, "minimum vote deposit must be positive");
    require(challenge_blocks > 0, errc::parameter, "challenge window must be positive");
  }
};

struct BondedIssuance {
  IssuanceId id{};
  AccountId issuer{};
  TokenId token{};
  Fixed total_issued{};
  Fixed bond_fraction{};
  Fixed bond{};
  IssuanceStatus status = IssuanceStatus::Active;
  dispute::CaseEscrow escrow;
};

struct RugClaim {
  CaseId id{};
  IssuanceId issuance{};
  AccountId claimant{};
  Fixed claim_bond{};
  std::uint64_t opened_at = 0;
  std::uint64_t challenge_end = 0;
  dispute::VoteBook votes;
  ClaimStatus status = ClaimStatus::Voting;
  dispute::CaseEscrow escrow;
};

struct Resolution {
  CaseId claim{};
  ClaimStatus outcome = ClaimStatus::Voting;
  dispute::Tally tally;
  Fixed slashed{};
  std::vector<dispute::Payout> payouts;
};

/// Issuance bonds and rug claims. Bonds, claim bonds and vote deposits are
/// all denominated in the issued token and held in one escrow account.
class RugproofBook {
 public:
  RugproofBook(AccountId escrow, AccountId treasury, SlashParams params = {})
      : escrow_(escrow), treasury_(treasury), params_(params) {
    params_.validate();
  }

  const SlashParams& params() const { return params_; }
  const std::vector<BondedIssuance>& issuances() const { return issuances_; }
  const std::vector<RugClaim>& claims() const { return claims_; }

  const BondedIssuance& issuance(IssuanceId id) const {
    require(id.value >= 1 && id.value <= issuances_.size(), errc::not_found, "unknown issuance");
    return issuances_[id.value - 1];
  }
  const RugClaim& claim(CaseId id) const {
    require(id.value >= 1 && id.value <= claims_.size(), errc::not_found, "unknown claim");
    return claims_[id.value - 1];
  }

  const BondedIssuance& issue_bonded_token(Ledger& ledger, AccountId issuer, TokenId token, Fixed total_issued,
                                           Fixed bond_fraction) {
    require(total_issued.is_positive(), errc::parameter, "total issued must be positive");
    require(bond_fraction <= Fixed::from_int(1), errc::parameter, "bond fraction must be at most 1");
    require(bond_fraction.is_positive() && bond_fraction >= params_.x_min, errc::nontrivial_bond,
            "bond fraction below the required minimum");
    BondedIssuance iss;
    iss.id = IssuanceId{static_cast<std::uint32_t>(issuances_.size() + 1)};
    iss.issuer = issuer;
    iss.token = token;
    iss.total_issued = total_issued;
    iss.bond_fraction = bond_fraction;
    iss.bond = total_issued * bond_fraction;
    iss.escrow = dispute::CaseEscrow(escrow_, token);
    iss.escrow.take(ledger, issuer, iss.bond);
    issuances_.push_back(std::move(iss));
    return issuances_.back();
  }

  const RugClaim& submit_rug_claim(Ledger& ledger, AccountId user, IssuanceId issuance_id, Fixed claim_fraction,
                                   std::uint64_t now) {
    auto& iss = mut_issuance(issuance_id);
    require(iss.status == IssuanceStatus::Active, errc::state, "issuance is not active");
    require(user.owner != iss.issuer.owner, errc::conflict, "issuer cannot claim against its own issuance");
    require(!open_claim(issuance_id), errc::conflict, "issuance already has an open claim");
    require(claim_fraction.is_positive() && claim_fraction <= Fixed::from_int(1), errc::parameter,
            "claim bond fraction must be in (0, 1]");
    RugClaim c;
    c.id = CaseId{static_cast<std::uint32_t>(claims_.size() + 1)};
    c.issuance = issuance_id;
    c.claimant = user;
    c.claim_bond = iss.total_issued * claim_fraction;
    c.opened_at = now;
    c.challenge_end = now + params_.challenge_blocks;
    c.escrow = dispute::CaseEscrow(escrow_, iss.token);
    c.escrow.take(ledger, user, c.claim_bond);
    claims_.push_back(std::move(c));
    return claims_.back();
  }

  void cast_vote(Ledger& ledger, CaseId claim_id, AccountId voter, Fixed deposit, Side side, std::uint64_t now) {
    auto& c = mut_claim(claim_id);
    require(c.status == ClaimStatus::Voting, errc::state, "claim is not open for voting");
    require(now >= c.opened_at, errc::early, "voting has not opened");
    require(now < c.challenge_end, errc::late, "voting window has closed");
    require(deposit >= params_.z_min, errc::parameter, "vote deposit below minimum");
    require(!c.votes.has_voted(voter), errc::conflict, "account has already voted");
    c.escrow.take(ledger, voter, deposit);
    c.votes.add(voter, deposit, side);
  }

  Resolution resolve_claim(Ledger& ledger, CaseId claim_id, std::uint64_t now) {
    auto& c = mut_claim(claim_id);
    require(c.status == ClaimStatus::Voting, errc::state, "claim already resolved");
    require(now >= c.challenge_end, errc::early, "challenge window still open");
    auto& iss = mut_issuance(c.issuance);
    Resolution r;
    r.claim = c.id;
    r.tally = c.votes.tally();
    const Side winner = r.tally.winner();

    if (winner == Side::For) {
      r.outcome = ClaimStatus::UpheldRug;
      r.slashed = iss.bond * params_.alpha_slash;
      const Fixed to_claimant = r.slashed * params_.claimant_share;
      std::vector<dispute::Weighted> eligible;
      for (const auto& w : dispute::voters_on(c.votes, Side::For))
        if (w.account.owner != iss.issuer.owner) eligible.push_back(w);
      iss.escrow.pay(ledger, c.claimant, to_claimant, "rug_claimant_share", r.payouts);
      const Fixed rest = r.slashed - to_claimant;
      if (eligible.empty()) {
        iss.escrow.pay(ledger, c.claimant, rest, "rug_claimant_share", r.payouts);
      } else {
        dispute::pay_shares(ledger, iss.escrow, dispute::pro_rata(rest, eligible, dispute::lowest_account(eligible)),
                            "rug_voter_share", r.payouts);
      }
      iss.escrow.pay(ledger, iss.issuer, iss.bond - r.slashed, "issuer_bond_remainder", r.payouts);
      iss.status = IssuanceStatus::Slashed;
      c.escrow.pay(ledger, c.claimant, c.claim_bond, "claim_bond_return", r.payouts);
    } else {
      r.outcome = ClaimStatus::RejectedFraud;
      r.slashed = c.claim_bond * params_.gamma_slash;
      const auto against = dispute::voters_on(c.votes, Side::Against);
      if (against.empty()) {
        c.escrow.pay(ledger, treasury_, r.slashed, "claim_slash_unclaimed", r.payouts);
      } else {
        dispute::pay_shares(ledger, c.escrow, dispute::pro_rata(r.slashed, against, dispute::lowest_account(against)),
                            "claim_slash_voter_share", r.payouts);
      }
      c.escrow.pay(ledger, c.claimant, c.claim_bond - r.slashed, "claim_bond_remainder", r.payouts);
    }
    settle_deposits(ledger, c, winner, r.payouts);
    c.status = r.outcome;
    return r;
  }

  /// Returns an unchallenged bond to the issuer.
  void release(Ledger& ledger, IssuanceId id, std::vector<dispute::Payout>& log) {
    auto& iss = mut_issuance(id);
    require(iss.status == IssuanceStatus::Active, errc::state, "issuance is not active");
    require(!open_claim(id), errc::conflict, "issuance has an open claim");
    iss.escrow.pay(ledger, iss.issuer, iss.escrow.held(), "issuer_bond_release", log);
    iss.status = IssuanceStatus::Released;
  }

  bool open_claim(IssuanceId id) const {
    return std::any_of(claims_.begin(), claims_.end(),
                       [&](const RugClaim& c) { return c.issuance == id && c.status == ClaimStatus::Voting; });
  }

 private:
  /// Deposits come back to everyone unless forfeiture is on, in which case
  /// losing deposits are split among winning voters (treasury if none).
  void settle_deposits(Ledger& ledger, RugClaim& c, Side winner, std::vector<dispute::Payout>& log) {
    const Side loser = winner == Side::For ? Side::Against : Side::For;
    Fixed forfeited;
    for (const auto& v : c.votes.votes()) {
      if (params_.forfeit_losing_deposits && v.side == loser)
        forfeited += v.deposit;
      else
        c.escrow.pay(ledger, v.voter, v.deposit, "vote_deposit_return", log);
    }
    if (!forfeited.is_positive()) return;
    const auto winners = dispute::voters_on(c.votes, winner);
    if (winners.empty())
      c.escrow.pay(ledger, treasury_, forfeited, "vote_deposit_forfeit", log);
    else
      dispute::pay_shares(ledger, c.escrow, dispute::pro_rata(forfeited, winners, dispute::lowest_account(winners)),
                          "vote_deposit_forfeit", log);
  }

  BondedIssuance& mut_issuance(IssuanceId id) {
    require(id.value >= 1 && id.value <= issuances_.size(), errc::not_found, "unknown issuance");
    return issuances_[id.value - 1];
  }
  RugClaim& mut_claim(CaseId id) {
    require(id.value >= 1 && id.value <= claims_.size(), errc::not_found, "unknown claim");
    return claims_[id.value - 1];
  }

  AccountId escrow_;
  AccountId treasury_;
  SlashParams params_;
  std::vector<BondedIssuance> issuances_;
  std::vector<RugClaim> claims_;
};

}  // namespace rugsim::rugproof
