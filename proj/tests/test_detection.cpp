#include <vector>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "rugsim/core/rng.hpp"
#include "rugsim/detection.hpp"

using namespace rugsim;
using namespace rugsim::literals;
using namespace rugsim::detection;

namespace {

constexpr TokenId kRug{1};
constexpr TokenId kUsd{2};
const AccountId kLp{1, OwnerId{1}};
const AccountId kActor{2, OwnerId{2}};

errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return errc::undefined;
}

market::PoolState pool(Fixed rug, Fixed usd, int fee = 0) {
  auto p = market::make_pool(PoolId{1}, kRug, kUsd, fee);
  market::pool_add_liquidity(p, kLp, rug, usd);
  return p;
}

market::DrainEvent drain(Fixed t_rug, std::uint64_t at = 13) {
  return {PoolId{1}, kLp, kRug, t_rug, t_rug * 2, {ChainId{1}, 10}, {ChainId{1}, at}, 0};
}

Intent intent(Fixed theta_p = "0.5"_fx, Fixed theta_l = "0.5"_fx, int fee = 50) {
  Intent in;
  in.owner = kActor;
  in.token = kRug;
  in.theta_price = theta_p;
  in.theta_liquidity = theta_l;
  in.solver_fee_bps = fee;
  in.p0 = "1"_fx;
  in.l0 = "1000"_fx;
  return in;
}

}  // namespace

TEST(Observe, Examples) {
  PoolMonitor m(PoolId{1});
  EXPECT_FALSE(m.observe(1, "1000"_fx).has_value());
  const auto s = m.observe(2, "400"_fx);
  ASSERT_TRUE(s.has_value());
  EXPECT_EQ(s->kind, SignalKind::LiquidityDrop);
  EXPECT_EQ(s->magnitude, "0.6"_fx);

  PoolMonitor flat(PoolId{1});
  flat.observe(1, "1000"_fx);
  EXPECT_FALSE(flat.observe(2, "1000"_fx).has_value());
  EXPECT_FALSE(flat.observe(3, "950"_fx).has_value());
  EXPECT_FALSE(flat.observe(4, "5000"_fx).has_value());
  EXPECT_EQ(code_of([&] { flat.observe(4, "1"_fx); }), errc::ordering);
}

TEST(ScanAux, Examples) {
  PoolMonitor m(PoolId{1});
  EXPECT_TRUE(m.scan_aux({1, {}, {}, {}, {}, {}}).empty());
  for (std::uint64_t h = 2; h < 6; ++h) m.scan_aux({h, "10"_fx, {}, {}, "100"_fx, {}});
  const auto mint = m.scan_aux({6, "100"_fx, {}, {}, "100"_fx, {}});
  ASSERT_EQ(mint.size(), 1u);
  EXPECT_EQ(mint[0].kind, SignalKind::MintSpike);

  PoolMonitor v(PoolId{1});
  for (std::uint64_t h = 1; h < 5; ++h) v.scan_aux({h, {}, {}, {}, "100"_fx, {}});
  const auto vol = v.scan_aux({5, {}, {}, {}, "500"_fx, {}});
  ASSERT_EQ(vol.size(), 1u);
  EXPECT_EQ(vol[0].kind, SignalKind::VolumeAnomaly);
  EXPECT_EQ(vol[0].magnitude, "5"_fx);
  EXPECT_TRUE(v.scan_aux({6, {}, {}, {}, "5000"_fx, "1"_fx}).empty());

  PoolMonitor w(PoolId{1});
  const auto out = w.scan_aux({1, {}, "60"_fx, "100"_fx, {}, {}});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].kind, SignalKind::WalletOutflow);
}

TEST(Frontrun, Examples) {
  const auto p = pool("1000"_fx, "1000"_fx);
  const auto plan = plan_frontrun(drain("500"_fx), p, kActor, "100"_fx, 11);
  ASSERT_EQ(plan.legs.size(), 1u);
  EXPECT_EQ(plan.legs[0].expected_out, "90.909090909"_fx);
  EXPECT_GT(plan.legs[0].priority, drain("500"_fx).priority);
  EXPECT_TRUE(plan_frontrun(drain("500"_fx), p, kActor, Fixed{}, 11).empty());
  EXPECT_EQ(code_of([&] { plan_frontrun(drain("500"_fx), p, kActor, "100"_fx, 13); }), errc::too_late);
}

TEST(Frontrun, PriorityOrderBeatsDrain) {
  const auto p = pool("1000"_fx, "1000"_fx);
  const auto ev = drain("500"_fx);
  auto plan = plan_frontrun(ev, p, kActor, "100"_fx, 11);
  std::vector<TxLeg> legs{{LegKind::BackrunBuy, kLp, p.id, kRug, ev.t_rug, {}, ev.priority, 0}};
  plan.legs[0].seq = 1;
  legs.push_back(plan.legs[0]);
  order_legs(legs);
  EXPECT_EQ(legs[0].kind, LegKind::FrontrunSell);
}

TEST(Sandwich, Examples) {
  const auto p = pool("1000"_fx, "1000"_fx);
  const auto plan = plan_sandwich(drain("2000"_fx), p, kActor, "100"_fx, 11);
  ASSERT_TRUE(plan.has_value());
  EXPECT_TRUE(plan->expected_profit.is_positive());
  ASSERT_EQ(plan->legs.size(), 2u);
  EXPECT_GT(plan->legs[0].priority, 0);
  EXPECT_LT(plan->legs[1].priority, 0);
  EXPECT_FALSE(plan_sandwich(drain(Fixed{}), p, kActor, "100"_fx, 11).has_value());
  EXPECT_FALSE(plan_sandwich(drain("2000"_fx), p, kActor, Fixed{}, 11).has_value());
  EXPECT_EQ(code_of([&] { plan_sandwich(drain("2000"_fx), p, kActor, "100"_fx, 13); }), errc::too_late);
}

TEST(Sandwich, PlannedProfitMatchesReplay) {
  Rng rng(71, "sandwich");
  int planned = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto p = pool(rng.uniform("100"_fx, "100000"_fx), rng.uniform("100"_fx, "100000"_fx),
                        static_cast<int>(rng.below(60)));
    const auto ev = drain(rng.uniform("1"_fx, "200000"_fx));
    const auto plan = plan_sandwich(ev, p, kActor, rng.uniform("1"_fx, "10000"_fx), 11);
    if (!plan) continue;
    ++planned;
    auto sim = p;
    const Fixed got = market::pool_swap(sim, kRug, plan->legs[0].amount_in).amount_out;
    market::pool_swap(sim, kRug, ev.t_rug);
    const Fixed back = market::pool_swap(sim, kUsd, plan->legs[1].amount_in).amount_out;
    EXPECT_GE(back, plan->legs[0].amount_in);
    EXPECT_EQ(got - plan->legs[1].amount_in, plan->expected_profit);
  }
  EXPECT_GT(planned, 100);
}

TEST(Backrun, Examples) {
  auto p = pool("1000"_fx, "1000"_fx);
  EXPECT_TRUE(plan_backrun(market::DrainOutcome{}, p, kRug, kActor, "10"_fx, "10"_fx).empty());

  // Selling ~414.2 into (1000,1000) halves the rug price.
  const auto ev = drain("414.213562373"_fx, 11);
  const auto out = market::execute_drain(ev, p, ev.t_rug, 11);
  EXPECT_NEAR(out.spot_after.to_double(), 0.5, 1e-6);
  const auto plan = plan_backrun(out, p, kRug, kActor, "20"_fx, "5"_fx);
  ASSERT_EQ(plan.legs.size(), 1u);
  EXPECT_TRUE(plan.salvage);
  EXPECT_EQ(plan.legs[0].amount_in, "5"_fx);
  EXPECT_EQ(plan.nominal_size, "5"_fx / out.spot_after);

  auto dead = pool("1000"_fx, "0.000001"_fx);
  const auto ev2 = drain("1000000000"_fx, 11);
  const auto out2 = market::execute_drain(ev2, dead, ev2.t_rug, 11);
  EXPECT_TRUE(plan_backrun(out2, dead, kRug, kActor, "0.000000001"_fx, "1"_fx).empty());
}

TEST(Intents, TriggerSemantics) {
  EXPECT_TRUE(triggered(intent(), {"0.4"_fx, "1000"_fx}).price);
  EXPECT_TRUE(triggered(intent(), {"1"_fx, "400"_fx}).liquidity);
  EXPECT_FALSE(triggered(intent(), {"0.6"_fx, "600"_fx}).any());
  IntentBook book;
  EXPECT_EQ(code_of([&] { book.register_intent(intent("1"_fx)); }), errc::parameter);
  EXPECT_EQ(code_of([&] { book.register_intent(intent("0.5"_fx, Fixed{})); }), errc::parameter);
}

TEST(Intents, SolverAuctionAndOneShot) {
  IntentBook book;
  const auto id = book.register_intent(intent());
  const AccountId s1{10, OwnerId{10}};
  const AccountId s2{11, OwnerId{11}};
  const AccountId s3{12, OwnerId{12}};
  const std::vector<SolverBid> bids{{s2, 20}, {s3, 80}, {s1, 20}};
  auto calm = [](const Intent&) { return MarketView{"0.9"_fx, "900"_fx}; };
  auto crash = [](const Intent&) { return MarketView{"0.4"_fx, "900"_fx}; };
  EXPECT_TRUE(book.solver_step(calm, bids).empty());
  const auto fills = book.solver_step(crash, bids);
  ASSERT_EQ(fills.size(), 1u);
  EXPECT_EQ(fills[0].solver, s1);
  EXPECT_EQ(fills[0].fee_bps, 20);
  EXPECT_EQ(book.intent(id).status, IntentStatus::Executed);
  EXPECT_TRUE(book.solver_step(crash, bids).empty());
}

TEST(Intents, FeeCapLeavesPending) {
  IntentBook book;
  const auto id = book.register_intent(intent("0.5"_fx, "0.5"_fx, 10));
  auto crash = [](const Intent&) { return MarketView{"0.1"_fx, "100"_fx}; };
  EXPECT_TRUE(book.solver_step(crash, {{kLp, 11}}).empty());
  EXPECT_EQ(book.intent(id).status, IntentStatus::Pending);
  EXPECT_EQ(book.solver_step(crash, {{kLp, 11}, {kActor, 10}}).size(), 1u);
}

TEST(Intents, ExecuteExitPaysSolver) {
  Ledger ledger;
  const AccountId owner = ledger.open_account();
  const AccountId solver = ledger.open_account();
  const AccountId pool_acct = ledger.open_account();
  ledger.mint(owner, kRug, "100"_fx);
  ledger.mint(pool_acct, kRug, "1000"_fx);
  ledger.mint(pool_acct, kUsd, "1000"_fx);
  auto p = pool("1000"_fx, "1000"_fx);
  Intent in = intent();
  in.owner = owner;
  const auto r = execute_exit(ledger, {&p, pool_acct}, in, solver, 100);
  EXPECT_EQ(r.sold, "100"_fx);
  EXPECT_EQ(r.proceeds, "90.909090909"_fx);
  EXPECT_EQ(r.solver_fee, "0.909090909"_fx);
  EXPECT_EQ(ledger.balance(owner, kUsd), r.proceeds - r.solver_fee);
  EXPECT_EQ(ledger.balance(solver, kUsd), r.solver_fee);
  EXPECT_EQ(code_of([&] { execute_exit(ledger, {&p, pool_acct}, in, solver, 100); }), errc::balance);
}
