#pragma once

#include "rugsim/core/error.hpp"
#include "rugsim/core/fixed.hpp"

namespace rugsim::tokenomics {

/// R_omega = omega * amount
inline Fixed deposit_reward(Fixed amount_cr, Fixed omega) {
  require(!amount_cr.is_negative(), errc::parameter, "deposit amount must be non-negative");
  return amount_cr * omega;
}

/// R_burn = theta * amount; vault creation guarantees theta > omega.
inline Fixed burn_reward(Fixed amount_ca, Fixed theta) {
  require(!amount_ca.is_negative(), errc::parameter, "burn amount must be non-negative");
  return amount_ca * theta;
}

}  // namespace rugsim::tokenomics
