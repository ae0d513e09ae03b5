#pragma once

#include <string>

#include <json.hpp>

#include "rugsim/core/fixed.hpp"
#include "rugsim/harness/engine.hpp"
#include "rugsim/harness/scenario.hpp"

namespace rugsim::harness {

/// Terminal numeraire value of protected users over an identical
/// unprotected one in the scam scenario.
struct ScamMargins {
  Fixed intent{};     // intent holder minus unprotected
  Fixed frontrun{};   // front-run protected minus unprotected
  std::string trace_hash;

  json to_json() const {
    return {{"intent_margin", intent.str()}, {"frontrun_margin", frontrun.str()}, {"trace_hash", trace_hash}};
  }
};

inline constexpr const char* kIntentUser = "alice";
inline constexpr const char* kProtectedUser = "bob";
inline constexpr const char* kUnprotectedUser = "carol";

inline ScamMargins scam_margins(const Scenario& sc) {
  Engine e(sc);
  e.run();
  const Fixed base = e.numeraire_value(e.account(kUnprotectedUser));
  return {e.numeraire_value(e.account(kIntentUser)) - base, e.numeraire_value(e.account(kProtectedUser)) - base,
          e.trace_hash()};
}

}  // namespace rugsim::harness
