#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rugsim {

/// Failure categories shared by every module. The harness records these in
/// the trace by name, so the spelling returned by to_string() is stable.
enum class errc {
  range,
  domain,
  parameter,
  dust,
  illiquid,
  balance,
  ratio,
  exists,
  not_found,
  conflict,
  early,
  late,
  state,
  too_late,
  ordering,
  undefined,
  invalid_liquidation,
  nontrivial_bond,
  confiscatory,
  final_level,
  not_party,
  load,
  usage,
};

constexpr std::string_view to_string(errc e) noexcept {
  switch (e) {
    case errc::range: return "range";
    case errc::domain: return "domain";
    case errc::parameter: return "parameter";
    case errc::dust: return "dust";
    case errc::illiquid: return "illiquid";
    case errc::balance: return "balance";
    case errc::ratio: return "ratio";
    case errc::exists: return "exists";
    case errc::not_found: return "not_found";
    case errc::conflict: return "conflict";
    case errc::early: return "early";
    case errc::late: return "late";
    case errc::state: return "state";
    case errc::too_late: return "too_late";
    case errc::ordering: return "ordering";
    case errc::undefined: return "undefined";
    case errc::invalid_liquidation: return "invalid_liquidation";
    case errc::nontrivial_bond: return "nontrivial_bond";
    case errc::confiscatory: return "confiscatory";
    case errc::final_level: return "final_level";
    case errc::not_party: return "not_party";
    case errc::load: return "load";
    case errc::usage: return "usage";
  }
  return "unknown";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw error(code, what); }

inline void require(bool cond, errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace rugsim
