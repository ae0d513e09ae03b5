#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rugsim/core/error.hpp"
#include "rugsim/core/fixed.hpp"
#include "rugsim/core/ids.hpp"
#include "rugsim/rewards.hpp"
#include "rugsim/vault.hpp"

namespace rugsim::tokenomics {

struct SupplyParams {
  Fixed s0 = Fixed::from_int(1);  // target supply scale
  Fixed epsilon_rate{};           // emission per block
  Fixed beta_burn{};              // per-block burn cap
  Fixed kappa = Fixed::from_int(1);

  void validate() const {
    require(!s0.is_negative() && !epsilon_rate.is_negative() && !beta_burn.is_negative(), errc::parameter,
            "supply parameters must be non-negative");
    require(kappa.is_positive() && kappa <= Fixed::from_int(1), errc::parameter, "kappa must be in (0, 1]");
  }
};

struct SupplyState {
  Fixed initial_supply{};
  Fixed current_supply{};
  Fixed minted_total{};
  Fixed burned_total{};
  std::uint64_t last_height = 0;

  bool consistent() const { return current_supply == initial_supply + minted_total - burned_total; }
};

/// s0 / max(1, ln(sum)); equals s0 whenever sum <= e.
inline Fixed target_supply(Fixed sum_cr_value, Fixed s0) {
  require(!sum_cr_value.is_negative(), errc::parameter, "sum of values must be non-negative");
  if (!sum_cr_value.is_positive()) return s0;
  const long double l = std::log(sum_cr_value.to_long_double());
  if (l <= 1.0L) return s0;
  return Fixed::from_long_double(s0.to_long_double() / l);
}

/// epsilon * blocks
inline Fixed block_emission(Fixed epsilon, std::int64_t blocks) {
  require(blocks >= 0, errc::parameter, "block count must be non-negative");
  return epsilon * blocks;
}

inline void emit(SupplyState& s, Fixed amount) {
  s.current_supply += amount;
  s.minted_total += amount;
}

struct BurnStep {
  Fixed burned{};
  Fixed target{};
};

/// One-sided proportional controller toward target_supply: burns
/// kappa * (current - target), capped by beta_burn and by `available`.
inline BurnStep burn_step(SupplyState& s, const SupplyParams& p, Fixed sum_vaulted_value,
                          std::optional<Fixed> available = std::nullopt) {
  BurnStep out;
  out.target = target_supply(sum_vaulted_value, p.s0);
  const Fixed excess = max(Fixed{}, s.current_supply - out.target);
  out.burned = min(excess * p.kappa, p.beta_burn);
  if (available) out.burned = min(out.burned, max(Fixed{}, *available));
  s.current_supply -= out.burned;
  s.burned_total += out.burned;
  return out;
}

struct VaultStat {
  VaultId vault{};
  ChainId chain{};
  Fixed deposited{};
  Fixed burned{};
  Fixed withdrawn{};
  Fixed price{};
  Fixed deposited_value{};
  Fixed vaulted_value{};
};

struct OracleReport {
  Fixed sum_cr_value{};       // sum of deposited C_r * current price
  Fixed sum_vaulted_value{};  // sum of C_r still vaulted * current price
  std::vector<VaultStat> per_vault;
};

using PriceLookup = std::function<Fixed(const vault::Vault&)>;

/// Aggregates every registry into one oracle report, ordered by vault id.
inline OracleReport aggregate_vault_stats(std::span<const vault::VaultRegistry* const> registries,
                                          const PriceLookup& price_of) {
  OracleReport r;
  for (const auto* reg : registries)
    for (const auto& [id, v] : reg->vaults()) {
      VaultStat s{id, v.chain, v.total_deposited, v.total_burned, v.total_withdrawn, price_of(v), {}, {}};
      s.deposited_value = s.deposited * s.price;
      s.vaulted_value = v.vaulted() * s.price;
      r.per_vault.push_back(s);
    }
  std::stable_sort(r.per_vault.begin(), r.per_vault.end(),
                   [](const VaultStat& a, const VaultStat& b) { return a.vault < b.vault; });
  for (const auto& s : r.per_vault) {
    r.sum_cr_value += s.deposited_value;
    r.sum_vaulted_value += s.vaulted_value;
  }
  return r;
}

struct MarkedVault {
  const vault::Vault* vault = nullptr;
  Fixed mark{};
};

/// sum of M_i * anticoin supply_i
inline Fixed market_potential(std::span<const MarkedVault> vaults) {
  Fixed total;
  for (const auto& m : vaults) {
    require(!m.mark.is_negative(), errc::parameter, "mark price must be non-negative");
    total += m.mark * m.vault->anticoin_supply();
  }
  return total;
}

}  // namespace rugsim::tokenomics
