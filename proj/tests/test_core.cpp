#include <map>
#include <string>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "rugsim/core/error.hpp"
#include "rugsim/core/fixed.hpp"
#include "rugsim/core/ledger.hpp"
#include "rugsim/core/rng.hpp"

using namespace rugsim;
using namespace rugsim::literals;

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

}  // namespace

TEST(Quantize, OneThird) { EXPECT_EQ(quantize(wide_int(1), wide_int(3)), "0.333333333"_fx); }

TEST(Quantize, Zero) { EXPECT_EQ(quantize(wide_int(0), wide_int(7)), Fixed{}); }

TEST(Quantize, TiesToEven) {
  // 2.5e-9 and 3.5e-9 as exact rationals.
  EXPECT_EQ(quantize(wide_int(25), wide_int(10'000'000'000LL)), Fixed::from_raw(2));
  EXPECT_EQ(quantize(wide_int(35), wide_int(10'000'000'000LL)), Fixed::from_raw(4));
  EXPECT_EQ(quantize(wide_int(-25), wide_int(10'000'000'000LL)), Fixed::from_raw(-2));
}

TEST(Quantize, Idempotent) {
  Rng rng(1, "quantize");
  for (int i = 0; i < 1000; ++i) {
    const Fixed v = rng.uniform("-1000000"_fx, "1000000"_fx);
    const wide_int num = detail::to_wide(v.raw());
    EXPECT_EQ(quantize(num, wide_int(Fixed::kScale)), v);
    const Fixed q = quantize(num * 7, wide_int(Fixed::kScale) * 3);
    EXPECT_EQ(quantize(detail::to_wide(q.raw()), wide_int(Fixed::kScale)), q);
  }
}

TEST(Quantize, OverflowIsRangeError) {
  const wide_int huge = detail::to_wide(detail::kInt128Max) * 4;
  EXPECT_EQ(code_of([&] { quantize(huge, wide_int(1)); }), errc::range);
}

TEST(Fixed, MulDivHalfEven) {
  EXPECT_EQ(Fixed::from_raw(5) * "0.5"_fx, Fixed::from_raw(2));
  EXPECT_EQ(Fixed::from_raw(7) * "0.5"_fx, Fixed::from_raw(4));
  EXPECT_EQ("1"_fx / "3"_fx, "0.333333333"_fx);
  EXPECT_EQ("2"_fx / "3"_fx, "0.666666667"_fx);
}

TEST(Fixed, RangeCoversTenToEighteen) {
  const Fixed big = Fixed::from_int(1'000'000'000'000'000'000LL);
  EXPECT_EQ((big + big) - big, big);
  EXPECT_EQ(-big - big + big, -big);
  EXPECT_EQ((big * "0.5"_fx).str(), "500000000000000000");
}

TEST(Fixed, OverflowIsReported) {
  const Fixed top = Fixed::from_raw(detail::kInt128Max);
  EXPECT_EQ(code_of([&] { top + Fixed::quantum(); }), errc::range);
  EXPECT_EQ(code_of([&] { -top - "2"_fx; }), errc::range);
  EXPECT_EQ(code_of([&] { top * "2"_fx; }), errc::range);
  EXPECT_EQ(code_of([&] { "1"_fx / Fixed{}; }), errc::domain);
}

TEST(Fixed, AddThenSubtractIsExact) {
  Rng rng(2, "additive");
  const Fixed lim = Fixed::from_int(1'000'000'000'000'000'000LL);
  for (int i = 0; i < 5000; ++i) {
    const Fixed a = rng.uniform(-lim, lim);
    const Fixed b = rng.uniform(-lim, lim);
    EXPECT_EQ((a + b) - b, a);
  }
}

TEST(Fixed, ParseAndPrint) {
  EXPECT_EQ(Fixed::parse("1.5").raw(), 1'500'000'000);
  EXPECT_EQ(Fixed::parse("-0.000000001"), -Fixed::quantum());
  EXPECT_EQ(Fixed::parse("1e3"), Fixed::from_int(1000));
  EXPECT_EQ(Fixed::parse("2.5e-9"), Fixed::from_raw(2));
  EXPECT_EQ("12.340"_fx.str(), "12.34");
  EXPECT_EQ(Fixed{}.str(), "0");
  EXPECT_EQ(code_of([] { Fixed::parse("abc"); }), errc::parameter);
}

TEST(SafeLn, Examples) {
  EXPECT_EQ(safe_ln("1"_fx), Fixed{});
  EXPECT_LE(oracle::quanta_off(safe_ln("2.718281828"_fx), oracle::ln(oracle::big("2.718281828"))), 2.0);
  EXPECT_NEAR(safe_ln("2.718281828"_fx).to_double(), 1.0, 2e-9);
  EXPECT_EQ(safe_ln("10"_fx), "2.302585093"_fx);
}

TEST(SafeLn, MatchesOracle) {
  Rng rng(3, "ln");
  for (int i = 0; i < 2000; ++i) {
    const Fixed x = rng.uniform(Fixed::quantum(), "1000000"_fx);
    EXPECT_LE(oracle::quanta_off(safe_ln(x), oracle::ln(oracle::of(x))), 2.0) << x.str();
  }
}

TEST(SafeLn, NonPositiveIsDomainError) {
  EXPECT_EQ(code_of([] { safe_ln(Fixed{}); }), errc::domain);
  EXPECT_EQ(code_of([] { safe_ln("-1"_fx); }), errc::domain);
}

TEST(SafeLn, ProductRule) {
  Rng rng(4, "ln-product");
  for (int i = 0; i < 2000; ++i) {
    const Fixed x = rng.uniform("1"_fx, "1000"_fx);
    const Fixed y = rng.uniform("1"_fx, "1000"_fx);
    const Fixed lhs = safe_ln(x * y);
    const Fixed rhs = safe_ln(x) + safe_ln(y);
    EXPECT_LE(abs(lhs - rhs).raw(), 4) << x.str() << " " << y.str();
  }
}

TEST(Transcendental, ExpAndPowMatchOracle) {
  EXPECT_LE(oracle::quanta_off(safe_exp("-1"_fx), oracle::exp(oracle::big(-1))), 1.0);
  EXPECT_EQ(pow_fixed("100"_fx, "1.5"_fx), "1000"_fx);
  EXPECT_EQ(pow_fixed(Fixed{}, "2"_fx), Fixed{});
  EXPECT_EQ(code_of([] { safe_exp("100000"_fx); }), errc::range);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42, "agent:x");
  Rng b(42, "agent:x");
  Rng c(42, "agent:y");
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next();
    EXPECT_EQ(va, b.next());
    differs |= va != c.next();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, DrawsStayInRange) {
  Rng rng(5, "range");
  for (int i = 0; i < 1000; ++i) {
    EXPECT_LT(rng.below(7), 7u);
    const Fixed u = rng.uniform("-2"_fx, "3"_fx);
    EXPECT_GE(u, "-2"_fx);
    EXPECT_LE(u, "3"_fx);
  }
  EXPECT_FALSE(rng.chance(Fixed{}));
  EXPECT_TRUE(rng.chance("1"_fx));
}

TEST(Ledger, TransferMintBurnConserve) {
  Ledger l;
  const TokenId t{1};
  const AccountId a = l.open_account(OwnerId{1});
  const AccountId b = l.open_account(OwnerId{1});
  const AccountId c = l.open_account(OwnerId{2});
  l.mint(a, t, "100"_fx);
  l.transfer(a, b, t, "40"_fx);
  l.transfer(b, c, t, "15"_fx);
  l.burn(c, t, "5"_fx);
  EXPECT_EQ(l.balance(a, t), "60"_fx);
  EXPECT_EQ(l.owner_balance(OwnerId{1}, t), "85"_fx);
  EXPECT_EQ(l.supply(t), "95"_fx);
  EXPECT_TRUE(l.conserved());
  EXPECT_EQ(code_of([&] { l.transfer(c, a, t, "11"_fx); }), errc::balance);
  EXPECT_EQ(code_of([&] { l.burn(c, t, "11"_fx); }), errc::balance);
}

TEST(Ledger, RollbackRestoresState) {
  Ledger l;
  const TokenId t{1};
  const AccountId a = l.open_account(OwnerId{1});
  const AccountId b = l.open_account(OwnerId{2});
  l.mint(a, t, "10"_fx);
  const auto before = l.snapshot();
  const auto cp = l.checkpoint();
  l.transfer(a, b, t, "3"_fx);
  l.mint(b, t, "7"_fx);
  l.rollback(cp);
  EXPECT_EQ(l.snapshot(), before);
  EXPECT_EQ(l.supply(t), "10"_fx);
  const auto j = l.take_journal();
  EXPECT_EQ(j.balances.size(), 1u);
  EXPECT_EQ(j.supply.size(), 1u);
}
