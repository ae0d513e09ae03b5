#include <vector>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "rugsim/core/rng.hpp"
#include "rugsim/rugproof.hpp"

using namespace rugsim;
using namespace rugsim::literals;
using namespace rugsim::rugproof;

namespace {

constexpr TokenId kTok{1};

errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return errc::undefined;
}

struct Fixture {
  Ledger ledger;
  AccountId escrow = ledger.open_account();
  AccountId treasury = ledger.open_account();
  RugproofBook book;
  AccountId issuer;
  AccountId claimant;
  std::vector<AccountId> voters;

  explicit Fixture(SlashParams p = {}) : book(escrow, treasury, p) {
    issuer = funded(1, "1000000"_fx);
    claimant = funded(2, "100000"_fx);
    for (std::uint32_t i = 0; i < 4; ++i) voters.push_back(funded(10 + i, "1000"_fx));
  }

  AccountId funded(std::uint32_t owner, Fixed amount) {
    const AccountId a = ledger.open_account(OwnerId{owner});
    ledger.mint(a, kTok, amount);
    return a;
  }

  Fixed gained(AccountId a, Fixed start) const { return ledger.balance(a, kTok) - start; }
};

Fixed sum_reason(const Resolution& r, AccountId to, const char* reason) {
  Fixed t{};
  for (const auto& p : r.payouts)
    if (p.to == to && p.reason == reason) t += p.amount;
  return t;
}

}  // namespace

TEST(IssueBondedToken, Examples) {
  Fixture f;
  const auto& iss = f.book.issue_bonded_token(f.ledger, f.issuer, kTok, "1000000"_fx, "0.05"_fx);
  EXPECT_EQ(iss.bond, "50000"_fx);
  EXPECT_EQ(f.ledger.balance(f.escrow, kTok), "50000"_fx);
  EXPECT_EQ(code_of([&] { f.book.issue_bonded_token(f.ledger, f.issuer, kTok, "1000000"_fx, Fixed{}); }),
            errc::nontrivial_bond);
  EXPECT_EQ(code_of([&] { f.book.issue_bonded_token(f.ledger, f.issuer, kTok, "1000000"_fx, "0.005"_fx); }),
            errc::nontrivial_bond);
  EXPECT_EQ(code_of([&] { f.book.issue_bonded_token(f.ledger, f.voters[0], kTok, "1000000"_fx, "0.05"_fx); }),
            errc::balance);
}

TEST(SubmitRugClaim, Examples) {
  Fixture f;
  const auto id = f.book.issue_bonded_token(f.ledger, f.issuer, kTok, "1000000"_fx, "0.05"_fx).id;
  const auto& c = f.book.submit_rug_claim(f.ledger, f.claimant, id, "0.02"_fx, 5);
  EXPECT_EQ(c.claim_bond, "20000"_fx);
  EXPECT_EQ(c.challenge_end, 15u);
  EXPECT_EQ(code_of([&] { f.book.submit_rug_claim(f.ledger, f.voters[0], id, "0.0001"_fx, 5); }), errc::conflict);
  EXPECT_EQ(code_of([&] { f.book.submit_rug_claim(f.ledger, f.issuer, id, "0.01"_fx, 5); }), errc::conflict);

  const auto id2 = f.book.issue_bonded_token(f.ledger, f.issuer, kTok, "1000000"_fx, "0.05"_fx).id;
  EXPECT_EQ(code_of([&] { f.book.submit_rug_claim(f.ledger, f.voters[0], id2, "0.02"_fx, 5); }), errc::balance);
}

TEST(SubmitRugClaim, SlashedIssuanceRejected) {
  Fixture f;
  const auto id = f.book.issue_bonded_token(f.ledger, f.issuer, kTok, "1000000"_fx, "0.05"_fx).id;
  const auto cid = f.book.submit_rug_claim(f.ledger, f.claimant, id, "0.02"_fx, 0).id;
  f.book.cast_vote(f.ledger, cid, f.voters[0], "10"_fx, Side::For, 1);
  f.book.resolve_claim(f.ledger, cid, 10);
  EXPECT_EQ(f.book.issuance(id).status, IssuanceStatus::Slashed);
  EXPECT_EQ(code_of([&] { f.book.submit_rug_claim(f.ledger, f.claimant, id, "0.02"_fx, 11); }), errc::state);
}

TEST(CastVote, Rules) {
  Fixture f;
  const auto id = f.book.issue_bonded_token(f.ledger, f.issuer, kTok, "1000000"_fx, "0.05"_fx).id;
  const auto cid = f.book.submit_rug_claim(f.ledger, f.claimant, id, "0.02"_fx, 0).id;
  f.book.cast_vote(f.ledger, cid, f.voters[0], "1"_fx, Side::For, 1);
  EXPECT_EQ(code_of([&] { f.book.cast_vote(f.ledger, cid, f.voters[1], "0.999"_fx, Side::For, 1); }),
            errc::parameter);
  EXPECT_EQ(code_of([&] { f.book.cast_vote(f.ledger, cid, f.voters[0], "5"_fx, Side::Against, 2); }),
            errc::conflict);
  EXPECT_EQ(code_of([&] { f.book.cast_vote(f.ledger, cid, f.voters[1], "5"_fx, Side::Against, 10); }), errc::late);
  EXPECT_EQ(code_of([&] { f.book.resolve_claim(f.ledger, cid, 9); }), errc::early);
}

TEST(ResolveClaim, UnanimousRugging) {
  Fixture f;
  const auto id = f.book.issue_bonded_token(f.ledger, f.issuer, kTok, "1000000"_fx, "0.05"_fx).id;
  const Fixed c0 = f.ledger.balance(f.claimant, kTok);
  const auto cid = f.book.submit_rug_claim(f.ledger, f.claimant, id, "0.02"_fx, 0).id;
  f.book.cast_vote(f.ledger, cid, f.voters[0], "100"_fx, Side::For, 1);
  f.book.cast_vote(f.ledger, cid, f.voters[1], "300"_fx, Side::For, 2);
  const auto r = f.book.resolve_claim(f.ledger, cid, 10);
  EXPECT_EQ(r.outcome, ClaimStatus::UpheldRug);
  EXPECT_EQ(r.slashed, "25000"_fx);
  EXPECT_EQ(f.gained(f.claimant, c0), "12500"_fx);
  EXPECT_EQ(f.gained(f.voters[0], "1000"_fx), "3125"_fx);
  EXPECT_EQ(f.gained(f.voters[1], "1000"_fx), "9375"_fx);
  EXPECT_EQ(f.ledger.balance(f.issuer, kTok), "1000000"_fx - "25000"_fx);
  EXPECT_EQ(f.ledger.balance(f.escrow, kTok), Fixed{});
}

TEST(ResolveClaim, NoVotesRejectsClaim) {
  Fixture f;
  const auto id = f.book.issue_bonded_token(f.ledger, f.issuer, kTok, "1000000"_fx, "0.05"_fx).id;
  const Fixed c0 = f.ledger.balance(f.claimant, kTok);
  const auto cid = f.book.submit_rug_claim(f.ledger, f.claimant, id, "0.02"_fx, 0).id;
  const auto r = f.book.resolve_claim(f.ledger, cid, 10);
  EXPECT_EQ(r.outcome, ClaimStatus::RejectedFraud);
  EXPECT_EQ(f.gained(f.claimant, c0), "-10000"_fx);
  EXPECT_EQ(f.ledger.balance(f.treasury, kTok), "10000"_fx);
  EXPECT_EQ(f.book.issuance(id).status, IssuanceStatus::Active);
}

TEST(ResolveClaim, UnanimousNotRugging) {
  Fixture f;
  const auto id = f.book.issue_bonded_token(f.ledger, f.issuer, kTok, "1000000"_fx, "0.05"_fx).id;
  const auto cid = f.book.submit_rug_claim(f.ledger, f.claimant, id, "0.02"_fx, 0).id;
  f.book.cast_vote(f.ledger, cid, f.voters[0], "50"_fx, Side::Against, 1);
  f.book.cast_vote(f.ledger, cid, f.voters[1], "50"_fx, Side::Against, 1);
  const auto r = f.book.resolve_claim(f.ledger, cid, 10);
  EXPECT_EQ(r.slashed, "10000"_fx);
  EXPECT_EQ(sum_reason(r, f.claimant, "claim_bond_remainder"), "10000"_fx);
  EXPECT_EQ(f.gained(f.voters[0], "1000"_fx), "5000"_fx);
  EXPECT_EQ(f.gained(f.voters[1], "1000"_fx), "5000"_fx);
  EXPECT_EQ(f.ledger.balance(f.escrow, kTok), "50000"_fx);
}

TEST(ResolveClaim, TieGoesAgainst) {
  Fixture f;
  const auto id = f.book.issue_bonded_token(f.ledger, f.issuer, kTok, "1000000"_fx, "0.05"_fx).id;
  const auto cid = f.book.submit_rug_claim(f.ledger, f.claimant, id, "0.02"_fx, 0).id;
  f.book.cast_vote(f.ledger, cid, f.voters[0], "50"_fx, Side::For, 1);
  f.book.cast_vote(f.ledger, cid, f.voters[1], "50"_fx, Side::Against, 1);
  EXPECT_EQ(f.book.resolve_claim(f.ledger, cid, 10).outcome, ClaimStatus::RejectedFraud);
}

TEST(ResolveClaim, IssuerVotesEarnNothing) {
  Fixture f;
  const AccountId sock = f.funded(1, "1000"_fx);
  const auto id = f.book.issue_bonded_token(f.ledger, f.issuer, kTok, "1000000"_fx, "0.05"_fx).id;
  const auto cid = f.book.submit_rug_claim(f.ledger, f.claimant, id, "0.02"_fx, 0).id;
  f.book.cast_vote(f.ledger, cid, sock, "500"_fx, Side::For, 1);
  f.book.cast_vote(f.ledger, cid, f.voters[0], "10"_fx, Side::For, 1);
  const auto r = f.book.resolve_claim(f.ledger, cid, 10);
  EXPECT_EQ(f.gained(sock, "1000"_fx), Fixed{});
  EXPECT_EQ(f.gained(f.voters[0], "1000"_fx), "12500"_fx);
  for (const auto& p : r.payouts) {
    if (p.to.owner == f.issuer.owner) { EXPECT_NE(p.reason, "rug_voter_share"); }
  }
}

// Random lifecycles: every escrowed token leaves exactly once, slashes stay
// within their bonds and the vote outcome ignores vote order.
TEST(RugproofFuzz, EscrowConservation) {
  Rng rng(51, "rugproof-fuzz");
  for (int trial = 0; trial < 300; ++trial) {
    SlashParams p;
    p.alpha_slash = rng.uniform(Fixed{}, "1"_fx);
    p.gamma_slash = rng.uniform(Fixed{}, "1"_fx);
    p.claimant_share = rng.uniform(Fixed{}, "1"_fx);
    p.forfeit_losing_deposits = rng.chance("0.5"_fx);
    Fixture f(p);
    const Fixed total = f.ledger.supply(kTok);
    const auto id = f.book
                        .issue_bonded_token(f.ledger, f.issuer, kTok, rng.uniform("1000"_fx, "1000000"_fx),
                                            rng.uniform("0.01"_fx, "0.2"_fx))
                        .id;
    const auto cid = f.book.submit_rug_claim(f.ledger, f.claimant, id, rng.uniform("0.001"_fx, "0.05"_fx), 0).id;
    for (const auto v : f.voters)
      if (rng.chance("0.7"_fx))
        f.book.cast_vote(f.ledger, cid, v, rng.uniform("1"_fx, "500"_fx),
                         rng.chance("0.5"_fx) ? Side::For : Side::Against, 1 + rng.below(9));
    const auto r = f.book.resolve_claim(f.ledger, cid, 10);
    const auto& c = f.book.claim(cid);
    const auto& iss = f.book.issuance(id);
    EXPECT_EQ(c.escrow.held(), Fixed{});
    EXPECT_EQ(c.escrow.in(), c.escrow.out());
    if (r.outcome == ClaimStatus::UpheldRug) {
      EXPECT_LE(r.slashed, iss.bond);
      EXPECT_EQ(iss.escrow.held(), Fixed{});
    } else {
      EXPECT_LE(r.slashed, c.claim_bond);
      EXPECT_EQ(iss.escrow.held(), iss.bond);
    }
    Fixed paid{};
    for (const auto& po : r.payouts) paid += po.amount;
    EXPECT_EQ(paid, c.escrow.out() + (iss.bond - iss.escrow.held()));
    EXPECT_EQ(f.ledger.supply(kTok), total);
    EXPECT_EQ(f.ledger.balance(f.escrow, kTok), iss.escrow.held());
  }
}
