#pragma once

#include <compare>
#include <cstdint>
#include <functional>

namespace rugsim {

template <class Tag>
struct Id {
  std::uint32_t value = 0;

  friend constexpr bool operator==(Id, Id) = default;
  friend constexpr auto operator<=>(Id, Id) = default;
};

using ChainId = Id<struct ChainTag>;
using TokenId = Id<struct TokenTag>;
using VaultId = Id<struct VaultTag>;
using PoolId = Id<struct PoolTag>;
using OwnerId = Id<struct OwnerTag>;
using PositionId = Id<struct PositionTag>;
using CaseId = Id<struct CaseTag>;
using IntentId = Id<struct IntentTag>;
using PolicyId = Id<struct PolicyTag>;
using IssuanceId = Id<struct IssuanceTag>;

/// Account handle. `owner` is the ground-truth beneficial owner: accounts
/// that share an owner are treated as one holder wherever holdings are
/// aggregated (withdrawal penalties, issuer exclusion). Identity and ordering
/// use `value` only; the owner link never changes after creation.
struct AccountId {
  std::uint32_t value = 0;
  OwnerId owner{};

  friend constexpr bool operator==(AccountId a, AccountId b) { return a.value == b.value; }
  friend constexpr auto operator<=>(AccountId a, AccountId b) { return a.value <=> b.value; }
};

struct BlockTime {
  ChainId chain{};
  std::uint64_t height = 0;

  friend constexpr bool operator==(BlockTime, BlockTime) = default;
};

}  // namespace rugsim

template <class Tag>
struct std::hash<rugsim::Id<Tag>> {
  std::size_t operator()(rugsim::Id<Tag> id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};

template <>
struct std::hash<rugsim::AccountId> {
  std::size_t operator()(rugsim::AccountId id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};
