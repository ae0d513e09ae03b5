#include <array>
#include <vector>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "rugsim/core/rng.hpp"
#include "rugsim/tokenomics.hpp"

using namespace rugsim;
using namespace rugsim::literals;
using namespace rugsim::tokenomics;

namespace {

errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return errc::undefined;
}

Fixed e_pow(int m) { return Fixed::parse(boost::multiprecision::exp(oracle::big(m)).str(40)); }

vault::VaultParams vparams() {
  vault::VaultParams p;
  p.omega = "0.01"_fx;
  p.theta = "0.02"_fx;
  p.penalty_lambda = "2"_fx;
  return p;
}

struct Chain {
  Ledger ledger;
  vault::VaultRegistry reg;
  explicit Chain(ChainId c) : reg(c) {}

  void add_vault(VaultId id, TokenId rug, Fixed deposited) {
    const AccountId custody = ledger.open_account();
    reg.create_vault({id, rug, TokenId{rug.value + 100}, custody, custody, vparams(), "1"_fx});
    const AccountId u = ledger.open_account(OwnerId{1});
    ledger.mint(u, rug, deposited);
    reg.deposit(ledger, id, u, deposited);
  }
};

}  // namespace

TEST(TargetSupply, Examples) {
  const Fixed s0 = "1000"_fx;
  EXPECT_EQ(target_supply("2.718281828"_fx, s0), s0);
  EXPECT_EQ(target_supply(e_pow(1), s0), s0);
  EXPECT_LE(abs(target_supply(e_pow(2), s0) - "500"_fx).raw(), 4);
  EXPECT_LE(abs(target_supply(e_pow(4), s0) - "250"_fx).raw(), 4);
  EXPECT_EQ(target_supply(Fixed{}, s0), s0);
  EXPECT_EQ(code_of([&] { target_supply("-1"_fx, s0); }), errc::parameter);
}

TEST(TargetSupply, InverseLogAndHalving) {
  for (int m = 1; m <= 16; ++m) {
    const Fixed t = target_supply(e_pow(m), "1"_fx);
    EXPECT_LE(oracle::quanta_off(t, oracle::big(1) / m), 4.0) << m;
  }
  // Doubling ln(sum) halves the target.
  for (int m = 2; m <= 8; ++m)
    EXPECT_LE(abs(target_supply(e_pow(2 * m), "64"_fx) * 2 - target_supply(e_pow(m), "64"_fx)).raw(), 8);
}

TEST(TargetSupply, NonIncreasing) {
  Rng rng(31, "target");
  for (int i = 0; i < 3000; ++i) {
    const Fixed a = rng.uniform(Fixed{}, "10000000"_fx);
    const Fixed b = a + rng.uniform(Fixed{}, "1000"_fx);
    EXPECT_GE(target_supply(a, "100"_fx), target_supply(b, "100"_fx));
  }
}

TEST(BlockEmission, Examples) {
  EXPECT_EQ(block_emission("5"_fx, 10), "50"_fx);
  EXPECT_EQ(block_emission(Fixed{}, 10), Fixed{});
  EXPECT_EQ(block_emission("5"_fx, 0), Fixed{});
  EXPECT_EQ(code_of([] { block_emission("1"_fx, -1); }), errc::parameter);
}

TEST(BurnStep, Examples) {
  SupplyParams p{"1000"_fx, Fixed{}, "1000000"_fx, "0.5"_fx};
  const Fixed sum = e_pow(4);
  const Fixed target = target_supply(sum, p.s0);

  SupplyState at{target, target, {}, {}, 0};
  EXPECT_EQ(burn_step(at, p, sum).burned, Fixed{});

  SupplyState above{target + "100"_fx, target + "100"_fx, {}, {}, 0};
  const auto b = burn_step(above, p, sum);
  EXPECT_EQ(b.burned, "50"_fx);
  EXPECT_EQ(b.target, target);
  EXPECT_EQ(above.current_supply, target + "50"_fx);
  EXPECT_TRUE(above.consistent());

  SupplyState below{target - "1"_fx, target - "1"_fx, {}, {}, 0};
  EXPECT_EQ(burn_step(below, p, sum).burned, Fixed{});
  EXPECT_EQ(below.current_supply, target - "1"_fx);
}

TEST(BurnStep, CapsAndAvailability) {
  SupplyParams p{"1"_fx, Fixed{}, "3"_fx, "1"_fx};
  SupplyState s{"100"_fx, "100"_fx, {}, {}, 0};
  EXPECT_EQ(burn_step(s, p, Fixed{}).burned, "3"_fx);
  EXPECT_EQ(burn_step(s, p, Fixed{}, "2"_fx).burned, "2"_fx);
  EXPECT_EQ(burn_step(s, p, Fixed{}, "-5"_fx).burned, Fixed{});
  EXPECT_EQ(s.current_supply, "95"_fx);
  EXPECT_TRUE(s.consistent());
}

TEST(SupplyIdentity, EveryBlock) {
  Rng rng(32, "identity");
  SupplyParams p{"500"_fx, "7"_fx, "20"_fx, "0.3"_fx};
  SupplyState s{"1000"_fx, "1000"_fx, {}, {}, 0};
  for (int h = 0; h < 5000; ++h) {
    const Fixed before = s.current_supply;
    const Fixed emission = block_emission(p.epsilon_rate, 1);
    emit(s, emission);
    const auto b = burn_step(s, p, rng.uniform(Fixed{}, "100000"_fx));
    ASSERT_EQ(s.current_supply - before, emission - b.burned);
    ASSERT_TRUE(s.consistent());
  }
}

TEST(Rewards, Examples) {
  EXPECT_EQ(deposit_reward("1000"_fx, "0.01"_fx), "10"_fx);
  EXPECT_EQ(deposit_reward(Fixed{}, "0.01"_fx), Fixed{});
  EXPECT_EQ(burn_reward("1000"_fx, "0.02"_fx), "20"_fx);
  Rng rng(33, "rewards");
  for (int i = 0; i < 1000; ++i) {
    const Fixed omega = rng.uniform(Fixed{}, "0.5"_fx);
    const Fixed theta = omega + rng.uniform(Fixed::quantum(), "0.5"_fx);
    const Fixed a = rng.uniform("0.001"_fx, "1000000"_fx);
    EXPECT_GT(burn_reward(a, theta), deposit_reward(a, omega));
  }
}

TEST(AggregateVaultStats, Examples) {
  const auto price = [](const vault::Vault&) { return "2"_fx; };
  EXPECT_EQ(aggregate_vault_stats({}, price).sum_cr_value, Fixed{});

  Chain a(ChainId{1});
  a.add_vault(VaultId{1}, TokenId{1}, "1000"_fx);
  const std::array<const vault::VaultRegistry*, 1> one{&a.reg};
  const auto r1 = aggregate_vault_stats(one, price);
  EXPECT_EQ(r1.sum_cr_value, "2000"_fx);
  EXPECT_EQ(r1.sum_vaulted_value, "2000"_fx);

  Chain b(ChainId{2});
  b.add_vault(VaultId{2}, TokenId{1}, "1000"_fx);
  const std::array<const vault::VaultRegistry*, 2> two{&b.reg, &a.reg};
  const auto r2 = aggregate_vault_stats(two, price);
  EXPECT_EQ(r2.sum_cr_value, r1.sum_cr_value * 2);
  ASSERT_EQ(r2.per_vault.size(), 2u);
  EXPECT_EQ(r2.per_vault[0].vault, VaultId{1});
}

TEST(MarketPotential, Examples) {
  EXPECT_EQ(market_potential({}), Fixed{});
  Chain a(ChainId{1});
  a.add_vault(VaultId{1}, TokenId{1}, "1000"_fx);
  const std::vector<MarkedVault> one{{&a.reg.get(VaultId{1}), "0.5"_fx}};
  EXPECT_EQ(market_potential(one), "500"_fx);
  const std::vector<MarkedVault> zero{{&a.reg.get(VaultId{1}), Fixed{}}};
  EXPECT_EQ(market_potential(zero), Fixed{});
}

// Two runs with the same emissions; the one with more value retained in
// vaults never ends with more supply.
TEST(Scarcity, MoreVaultedValueNeverRaisesSupply) {
  Rng rng(34, "scarcity");
  for (int trial = 0; trial < 200; ++trial) {
    SupplyParams p{rng.uniform("10"_fx, "1000"_fx), rng.uniform(Fixed{}, "5"_fx), rng.uniform("1"_fx, "50"_fx),
                   rng.uniform("0.01"_fx, "1"_fx)};
    SupplyState base{"1000"_fx, "1000"_fx, {}, {}, 0};
    SupplyState burn = base;
    Fixed vaulted_base{};
    Fixed extra{};
    for (int h = 0; h < 200; ++h) {
      vaulted_base += rng.uniform(Fixed{}, "100"_fx);
      extra += rng.uniform(Fixed{}, "50"_fx);
      emit(base, p.epsilon_rate);
      emit(burn, p.epsilon_rate);
      burn_step(base, p, vaulted_base);
      burn_step(burn, p, vaulted_base + extra);
      ASSERT_LE(burn.current_supply, base.current_supply);
    }
  }
}
