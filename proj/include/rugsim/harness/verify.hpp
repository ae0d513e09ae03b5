#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rugsim/core/error.hpp"
#include "rugsim/core/fixed.hpp"
#include "rugsim/core/hash.hpp"
#include "rugsim/harness/trace.hpp"

namespace rugsim::harness {

struct VerifyReport {
  bool ok = true;
  std::uint64_t events = 0;
  std::optional<std::uint64_t> first_bad_seq;
  std::string message;
};

namespace detail {

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) lines.push_back(line);
  return lines;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace detail

/// Replays a trace directory. Missing or unreadable files raise errc::load;
/// a broken invariant is reported with the first offending event.
inline VerifyReport verify_trace(const std::filesystem::path& dir) {
  using json = nlohmann::json;
  const std::string events_text = read_text_file(dir / kEventsFile);
  const std::string telemetry_text = read_text_file(dir / kTelemetryFile);
  const std::string state_text = read_text_file(dir / kStateFile);
  const std::string hash_text = read_text_file(dir / kHashFile);

  VerifyReport rep;
  auto bad = [&](std::optional<std::uint64_t> seq, std::string msg) {
    rep.ok = false;
    rep.first_bad_seq = seq;
    rep.message = std::move(msg);
    return rep;
  };

  json state;
  try {
    state = json::parse(state_text);
  } catch (const json::exception& e) {
    fail(errc::load, std::string("state.json is not valid JSON: ") + e.what());
  }

  Fnv1a64 h;
  std::map<std::pair<std::uint32_t, std::uint32_t>, Fixed> balances;
  std::map<std::uint32_t, Fixed> supply;
  std::map<std::uint64_t, Fixed> rsf_supply_at;  // supply at the end of each height
  std::optional<std::uint32_t> rsf;
  std::uint64_t expected_seq = 0;

  for (const auto& line : detail::split_lines(events_text)) {
    h.update(line);
    h.update("\n");
    json ev;
    try {
      ev = json::parse(line);
    } catch (const json::exception&) {
      return bad(expected_seq, "event line is not valid JSON");
    }
    try {
      const auto seq = ev.at("seq").get<std::uint64_t>();
      if (seq != expected_seq) return bad(seq, "sequence gap: expected " + std::to_string(expected_seq));
      ++expected_seq;
      if (ev.dump() != line) return bad(seq, "event is not in canonical form");
      if (ev.at("type") == "genesis") rsf = ev.at("rsf_token").get<std::uint32_t>();
      std::map<std::uint32_t, Fixed> delta_sum;
      std::map<std::uint32_t, Fixed> supply_sum;
      if (ev.contains("deltas"))
        for (const auto& d : ev["deltas"]) {
          const auto a = d.at("a").get<std::uint32_t>();
          const auto t = d.at("t").get<std::uint32_t>();
          const Fixed v = Fixed::parse(d.at("v").get<std::string>());
          delta_sum[t] += v;
          Fixed& b = balances[{a, t}];
          b += v;
          if (b.is_negative())
            return bad(seq, "account " + std::to_string(a) + " goes negative in token " + std::to_string(t));
        }
      if (ev.contains("supply"))
        for (const auto& d : ev["supply"]) {
          const auto t = d.at("t").get<std::uint32_t>();
          const Fixed v = Fixed::parse(d.at("v").get<std::string>());
          supply_sum[t] += v;
          supply[t] += v;
        }
      for (const auto& [t, v] : delta_sum)
        if (v != supply_sum[t]) return bad(seq, "token " + std::to_string(t) + " not conserved within the event");
      for (const auto& [t, v] : supply_sum)
        if (v != delta_sum[t]) return bad(seq, "token " + std::to_string(t) + " not conserved within the event");
      if (rsf) rsf_supply_at[ev.at("height").get<std::uint64_t>()] = supply[*rsf];
    } catch (const json::exception& e) {
      return bad(expected_seq, std::string("malformed event: ") + e.what());
    } catch (const error& e) {
      return bad(expected_seq, std::string("malformed event: ") + e.what());
    }
  }
  rep.events = expected_seq;

  const std::string hash = h.hex();
  std::string recorded = hash_text;
  while (!recorded.empty() && (recorded.back() == '\n' || recorded.back() == '\r')) recorded.pop_back();
  if (recorded != hash) return bad(std::nullopt, "hash.txt does not match the event log (" + hash + ")");
  if (state.value("trace_hash", "") != hash) return bad(std::nullopt, "state.json trace_hash does not match");

  try {
    std::map<std::pair<std::uint32_t, std::uint32_t>, Fixed> recorded_balances;
    for (const auto& b : state.at("balances"))
      recorded_balances[{b.at("a").get<std::uint32_t>(), b.at("t").get<std::uint32_t>()}] =
          Fixed::parse(b.at("v").get<std::string>());
    for (const auto& [k, v] : balances)
      if (!v.is_zero() && recorded_balances[k] != v)
        return bad(std::nullopt, "state.json balance of account " + std::to_string(k.first) + " token " +
                                     std::to_string(k.second) + " differs from the replay");
    for (const auto& [k, v] : recorded_balances)
      if (balances[k] != v)
        return bad(std::nullopt, "state.json balance of account " + std::to_string(k.first) + " token " +
                                     std::to_string(k.second) + " differs from the replay");
    for (const auto& t : state.at("tokens")) {
      const auto id = t.at("id").get<std::uint32_t>();
      if (Fixed::parse(t.at("supply").get<std::string>()) != supply[id])
        return bad(std::nullopt, "state.json supply of token " + std::to_string(id) + " differs from the replay");
    }

    // Supply identity per Rugsafe-chain telemetry row.
    const auto rows = detail::split_lines(telemetry_text);
    if (rows.empty() || rows.front() != kTelemetryHeader) return bad(std::nullopt, "telemetry header mismatch");
    Fixed prev = Fixed::parse(state.at("supply").at("initial").get<std::string>());
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto cells = detail::split_csv(rows[i]);
      if (cells.size() != 8) return bad(std::nullopt, "telemetry row " + std::to_string(i) + " has wrong arity");
      if (cells[4].empty()) continue;
      const auto height = std::stoull(cells[1]);
      const Fixed emission = Fixed::parse(cells[2]);
      const Fixed burned = Fixed::parse(cells[3]);
      const Fixed current = Fixed::parse(cells[4]);
      if (current - prev != emission - burned)
        return bad(std::nullopt, "supply change at height " + std::to_string(height) + " is not emission - burned");
      auto it = rsf_supply_at.upper_bound(height);
      if (it != rsf_supply_at.begin() && std::prev(it)->second != current)
        return bad(std::nullopt, "telemetry supply at height " + std::to_string(height) + " differs from the replay");
      prev = current;
    }
  } catch (const json::exception& e) {
    fail(errc::load, std::string("state.json is malformed: ") + e.what());
  } catch (const std::logic_error& e) {
    return bad(std::nullopt, std::string("telemetry is malformed: ") + e.what());
  } catch (const error& e) {
    return bad(std::nullopt, std::string("malformed value: ") + e.what());
  }
  return rep;
}

}  // namespace rugsim::harness
