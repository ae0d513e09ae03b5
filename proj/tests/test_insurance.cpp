#include <vector>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "rugsim/core/rng.hpp"
#include "rugsim/insurance.hpp"

using namespace rugsim;
using namespace rugsim::literals;
using namespace rugsim::insurance;

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
  InsuranceBook book;
  AccountId insurer;
  AccountId insured;
  AccountId challenger;
  std::vector<AccountId> others;

  explicit Fixture(InsuranceParams p = {}) : book(escrow, p) {
    insurer = funded("100000"_fx);
    insured = funded("10000"_fx);
    challenger = funded("10000"_fx);
    for (int i = 0; i < 5; ++i) others.push_back(funded("10000"_fx));
  }

  AccountId funded(Fixed amount) {
    const AccountId a = ledger.open_account();
    ledger.mint(a, kTok, amount);
    return a;
  }

  PolicyId policy(Fixed value = "1000"_fx, Fixed x = "0.1"_fx) {
    return book.issue_policy(ledger, insurer, insured, kTok, value, x, 100, 0).id;
  }

  Fixed bal(AccountId a) const { return ledger.balance(a, kTok); }
};

Fixed sum_reason(const Resolution& r, const char* reason) {
  Fixed t{};
  for (const auto& p : r.payouts)
    if (p.reason == reason) t += p.amount;
  return t;
}

}  // namespace

TEST(IssuePolicy, Examples) {
  Fixture f;
  EXPECT_EQ(f.book.policy(f.policy()).insurer_bond, "100"_fx);
  EXPECT_EQ(code_of([&] { f.book.issue_policy(f.ledger, f.insurer, f.insured, kTok, "1000"_fx, Fixed{}, 10, 0); }),
            errc::nontrivial_bond);
  EXPECT_EQ(code_of([&] { f.book.issue_policy(f.ledger, f.insurer, f.insured, kTok, "1000"_fx, "0.1"_fx, 0, 0); }),
            errc::parameter);
  EXPECT_EQ(code_of([&] { f.book.issue_policy(f.ledger, f.insured, f.insurer, kTok, "1000000"_fx, "0.5"_fx, 9, 0); }),
            errc::balance);

  InsuranceParams lax;
  lax.x_min = Fixed{};
  Fixture g(lax);
  EXPECT_EQ(g.book.issue_policy(g.ledger, g.insurer, g.insured, kTok, "1000"_fx, Fixed{}, 10, 0).insurer_bond, Fixed{});
}

TEST(SubmitAndJoin, Bonds) {
  Fixture f;
  const auto pid = f.policy();
  const auto cid = f.book.submit_claim(f.ledger, pid, f.insured, "0.05"_fx, 1).id;
  EXPECT_EQ(f.book.claim(cid).claim_bond, "50"_fx);
  for (int i = 0; i < 3; ++i) f.book.join_claim(f.ledger, cid, f.others[i], "100"_fx, "0.02"_fx, 2);
  for (const auto& j : f.book.claim(cid).joiners) EXPECT_EQ(j.bond, "20"_fx);
  EXPECT_EQ(code_of([&] { f.book.join_claim(f.ledger, cid, f.others[0], "1"_fx, "0.02"_fx, 2); }), errc::conflict);
  f.book.dispute_claim(f.ledger, cid, f.challenger, "0.03"_fx, 3);
  EXPECT_EQ(f.book.claim(cid).dispute->bond, "30"_fx);
  EXPECT_EQ(code_of([&] { f.book.join_claim(f.ledger, cid, f.others[3], "1"_fx, "0.02"_fx, 4); }), errc::state);
  EXPECT_EQ(code_of([&] { f.book.dispute_claim(f.ledger, cid, f.others[4], "0.03"_fx, 4); }), errc::conflict);
  EXPECT_EQ(code_of([&] { f.book.submit_claim(f.ledger, pid, f.insured, "0.05"_fx, 5); }), errc::state);
}

TEST(Dispute, LateDisputeAndAutoApproval) {
  Fixture f;
  const auto cid = f.book.submit_claim(f.ledger, f.policy(), f.insured, "0.05"_fx, 0).id;
  EXPECT_EQ(code_of([&] { f.book.dispute_claim(f.ledger, cid, f.challenger, "0.03"_fx, 10); }), errc::late);
  EXPECT_EQ(code_of([&] { f.book.resolve_insurance(f.ledger, cid, 9); }), errc::early);
  const Fixed before = f.bal(f.insured);
  const auto r = f.book.resolve_insurance(f.ledger, cid, 10);
  EXPECT_EQ(r.outcome, ClaimStatus::Approved);
  EXPECT_EQ(r.compensation, "1020"_fx);
  EXPECT_EQ(f.bal(f.insured) - before, "1070"_fx);
  EXPECT_EQ(f.bal(f.escrow), Fixed{});
  EXPECT_EQ(code_of([&] { f.book.resolve_insurance(f.ledger, cid, 11); }), errc::state);
}

TEST(Resolve, RejectedCollectivePenalty) {
  Fixture f;
  const auto cid = f.book.submit_claim(f.ledger, f.policy(), f.insured, "0.05"_fx, 0).id;
  for (int i = 0; i < 3; ++i) f.book.join_claim(f.ledger, cid, f.others[i], "100"_fx, "0.02"_fx, 1);
  f.book.dispute_claim(f.ledger, cid, f.challenger, "0.03"_fx, 2);
  f.book.cast_vote(f.ledger, cid, f.others[3], "10"_fx, Side::Against, 3);
  EXPECT_EQ(f.book.tally(cid, 12), Side::Against);
  const Fixed c0 = f.bal(f.challenger);
  const auto r = f.book.resolve_insurance(f.ledger, cid, 22);
  EXPECT_EQ(r.outcome, ClaimStatus::Rejected);
  EXPECT_EQ(r.penalty, "55"_fx);
  EXPECT_EQ(sum_reason(r, "claim_penalty"), "55"_fx);
  // Challenger weight 30, voter 10: 41.25 and 13.75.
  EXPECT_EQ(f.bal(f.challenger) - c0, "41.25"_fx + "30"_fx);
  EXPECT_EQ(f.bal(f.others[3]), "10000"_fx + "13.75"_fx);
  EXPECT_EQ(f.bal(f.others[0]), "10000"_fx - "10"_fx);
  EXPECT_EQ(f.book.policy(f.book.claim(cid).policy).status, PolicyStatus::Active);
  EXPECT_EQ(f.bal(f.escrow), "100"_fx);
}

TEST(Resolve, ApprovedAfterVoteSlashesDispute) {
  Fixture f;
  const auto cid = f.book.submit_claim(f.ledger, f.policy(), f.insured, "0.05"_fx, 0).id;
  f.book.join_claim(f.ledger, cid, f.others[0], "1000"_fx, "0.02"_fx, 1);
  f.book.dispute_claim(f.ledger, cid, f.challenger, "0.03"_fx, 2);
  f.book.cast_vote(f.ledger, cid, f.others[1], "5"_fx, Side::For, 3);
  f.book.tally(cid, 12);
  const auto r = f.book.resolve_insurance(f.ledger, cid, 22);
  EXPECT_EQ(r.outcome, ClaimStatus::Approved);
  EXPECT_EQ(r.compensation, "1020"_fx);
  EXPECT_EQ(sum_reason(r, "compensation"), "1020"_fx);
  EXPECT_EQ(r.penalty, "15"_fx);
  EXPECT_EQ(sum_reason(r, "dispute_bond_remainder"), "15"_fx);
  EXPECT_EQ(f.bal(f.escrow), Fixed{});
}

TEST(Escalate, MultiplierAndLimits) {
  Fixture f;
  const auto cid = f.book.submit_claim(f.ledger, f.policy(), f.insured, "0.05"_fx, 0).id;
  f.book.dispute_claim(f.ledger, cid, f.challenger, "0.03"_fx, 1);
  f.book.cast_vote(f.ledger, cid, f.others[0], "10"_fx, Side::Against, 2);
  f.book.tally(cid, 11);
  std::vector<dispute::Payout> log;
  EXPECT_EQ(code_of([&] { f.book.escalate(f.ledger, cid, f.others[1], 12, log); }), errc::not_party);
  EXPECT_EQ(code_of([&] { f.book.escalate(f.ledger, cid, f.challenger, 12, log); }), errc::not_party);
  EXPECT_EQ(f.book.escalate(f.ledger, cid, f.insured, 12, log), "100"_fx);
  EXPECT_EQ(f.book.claim(cid).level, 1);
  EXPECT_EQ(f.bal(f.others[0]), "10000"_fx);

  f.book.cast_vote(f.ledger, cid, f.others[0], "10"_fx, Side::For, 13);
  f.book.tally(cid, 22);
  EXPECT_EQ(f.book.escalate(f.ledger, cid, f.challenger, 23, log), "60"_fx);
  f.book.cast_vote(f.ledger, cid, f.others[1], "20"_fx, Side::Against, 24);
  f.book.tally(cid, 33);
  EXPECT_EQ(code_of([&] { f.book.escalate(f.ledger, cid, f.insured, 34, log); }), errc::final_level);
  const auto r = f.book.resolve_insurance(f.ledger, cid, 43);
  EXPECT_EQ(r.outcome, ClaimStatus::Rejected);
  EXPECT_EQ(r.escalation_slashed, "50"_fx);
  EXPECT_EQ(f.bal(f.escrow), "100"_fx);
}

TEST(Escalate, LateWindow) {
  Fixture f;
  const auto cid = f.book.submit_claim(f.ledger, f.policy(), f.insured, "0.05"_fx, 0).id;
  f.book.dispute_claim(f.ledger, cid, f.challenger, "0.03"_fx, 1);
  f.book.tally(cid, 11);
  std::vector<dispute::Payout> log;
  EXPECT_EQ(code_of([&] { f.book.escalate(f.ledger, cid, f.insured, 21, log); }), errc::late);
}

// Random lifecycles with joins, disputes, votes and escalations.
TEST(InsuranceFuzz, EscrowConservation) {
  Rng rng(61, "insurance-fuzz");
  for (int trial = 0; trial < 300; ++trial) {
    InsuranceParams p;
    p.alpha_comp = rng.uniform(Fixed{}, "1"_fx);
    p.gamma_pen = rng.uniform(Fixed{}, "1"_fx);
    Fixture f(p);
    const Fixed supply = f.ledger.supply(kTok);
    const Fixed iv = rng.uniform("10"_fx, "5000"_fx);
    const auto pid = f.policy(iv, rng.uniform("0.01"_fx, "0.5"_fx));
    const Fixed bond = f.book.policy(pid).insurer_bond;
    const auto cid = f.book.submit_claim(f.ledger, pid, f.insured, rng.uniform("0.01"_fx, "0.1"_fx), 0).id;
    Fixed join_bonds{};
    for (int i = 0; i < 2; ++i) {
      if (rng.chance("0.5"_fx)) f.book.join_claim(f.ledger, cid, f.others[i], rng.uniform("1"_fx, iv), "0.02"_fx, 1);
    }
    for (const auto& j : f.book.claim(cid).joiners) join_bonds += j.bond;
    const bool disputed = rng.chance("0.6"_fx);
    std::uint64_t now = 10;
    std::vector<dispute::Payout> log;
    if (disputed) {
      f.book.dispute_claim(f.ledger, cid, f.challenger, rng.uniform("0.01"_fx, "0.1"_fx), 2);
      for (int level = 0;; ++level) {
        const std::uint64_t start = now;
        for (int i = 2; i < 5; ++i)
          if (rng.chance("0.7"_fx))
            f.book.cast_vote(f.ledger, cid, f.others[i], rng.uniform("1"_fx, "50"_fx),
                             rng.chance("0.5"_fx) ? Side::For : Side::Against, start);
        now = f.book.claim(cid).vote_end;
        const Side s = f.book.tally(cid, now);
        const AccountId loser = s == Side::For ? f.challenger : f.insured;
        if (level >= p.max_escalations || !rng.chance("0.5"_fx)) break;
        f.book.escalate(f.ledger, cid, loser, now, log);
      }
      now = f.book.claim(cid).escalation_end;
    }
    const auto r = f.book.resolve_insurance(f.ledger, cid, now);
    const auto& c = f.book.claim(cid);
    ASSERT_EQ(c.escrow.in(), c.escrow.out());
    EXPECT_LE(r.compensation, iv + bond * p.alpha_comp);
    if (r.outcome == ClaimStatus::Approved && !disputed) {
      EXPECT_EQ(r.compensation, iv + bond * p.alpha_comp);
    }
    if (r.outcome == ClaimStatus::Rejected) {
      EXPECT_LE(r.penalty, (c.claim_bond + join_bonds) * p.gamma_pen + Fixed::from_raw(3));
      EXPECT_EQ(f.book.policy(pid).escrow.held(), bond);
    } else {
      EXPECT_EQ(f.book.policy(pid).escrow.held(), Fixed{});
    }
    EXPECT_EQ(f.bal(f.escrow), f.book.policy(pid).escrow.held());
    EXPECT_EQ(f.ledger.supply(kTok), supply);
  }
}
