#pragma once

#include "rugsim/core/ledger.hpp"
#include "rugsim/market.hpp"

namespace rugsim {

/// A pool together with the ledger account that mirrors its reserves.
struct PoolHandle {
  market::PoolState* pool = nullptr;
  AccountId account{};
};

/// Swap that moves the trader's tokens through the ledger. Validation runs
/// before any state changes, so a rejected trade leaves everything intact.
inline market::SwapQuote ledger_swap(Ledger& ledger, PoolHandle h, AccountId trader, TokenId input, Fixed dx) {
  require(ledger.balance(trader, input) >= dx, errc::balance, "insufficient balance for swap");
  const auto q = market::quote_swap(*h.pool, input, dx);
  market::pool_swap(*h.pool, input, dx);
  ledger.transfer(trader, h.account, input, dx);
  ledger.transfer(h.account, trader, q.token_out, q.amount_out);
  return q;
}

inline market::LiquidityChange ledger_add_liquidity(Ledger& ledger, PoolHandle h, AccountId provider, Fixed dx,
                                                    Fixed dy) {
  auto& pool = *h.pool;
  require(ledger.balance(provider, pool.token_x) >= dx && ledger.balance(provider, pool.token_y) >= dy,
          errc::balance, "insufficient balance for liquidity");
  const auto c = market::pool_add_liquidity(pool, provider, dx, dy);
  ledger.transfer(provider, h.account, pool.token_x, dx);
  ledger.transfer(provider, h.account, pool.token_y, dy);
  return c;
}

inline market::LiquidityChange ledger_remove_liquidity(Ledger& ledger, PoolHandle h, AccountId provider,
                                                       Fixed share) {
  auto& pool = *h.pool;
  const auto c = market::pool_remove_liquidity(pool, provider, share);
  ledger.transfer(h.account, provider, pool.token_x, c.amount_x);
  ledger.transfer(h.account, provider, pool.token_y, c.amount_y);
  return c;
}

}  // namespace rugsim
