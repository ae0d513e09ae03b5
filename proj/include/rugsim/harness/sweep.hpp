#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "rugsim/core/error.hpp"
#include "rugsim/core/fixed.hpp"
#include "rugsim/harness/engine.hpp"
#include "rugsim/harness/scenario.hpp"
#include "rugsim/harness/trace.hpp"

namespace rugsim::harness {

struct SweepSpec {
  std::string key;  // dotted path; numeric segments index arrays
  Fixed from{};
  Fixed to{};
  Fixed step{};

  /// from, from + step, ... up to and including `to`.
  std::vector<Fixed> values() const {
    std::vector<Fixed> out;
    for (Fixed v = from; v <= to; v += step) out.push_back(v);
    return out;
  }
};

/// Parses KEY=A:B:STEP. Errors are usage errors.
inline SweepSpec parse_sweep(const std::string& text) {
  const auto eq = text.find('=');
  require(eq != std::string::npos && eq > 0, errc::usage, "sweep parameter must look like KEY=A:B:STEP");
  SweepSpec s;
  s.key = text.substr(0, eq);
  const std::string range = text.substr(eq + 1);
  const auto c1 = range.find(':');
  const auto c2 = c1 == std::string::npos ? std::string::npos : range.find(':', c1 + 1);
  require(c2 != std::string::npos && range.find(':', c2 + 1) == std::string::npos, errc::usage,
          "sweep range must be A:B:STEP");
  try {
    s.from = Fixed::parse(range.substr(0, c1));
    s.to = Fixed::parse(range.substr(c1 + 1, c2 - c1 - 1));
    s.step = Fixed::parse(range.substr(c2 + 1));
  } catch (const error& e) {
    fail(errc::usage, std::string("sweep range is not numeric: ") + e.what());
  }
  require(s.step.is_positive(), errc::usage, "sweep step must be positive");
  require(s.from <= s.to, errc::usage, "sweep range is empty");
  return s;
}

/// Locates the dotted key; the target must already hold a number.
inline json& sweep_target(json& doc, const std::string& key) {
  json* cur = &doc;
  std::size_t pos = 0;
  while (true) {
    const auto dot = key.find('.', pos);
    const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    require(!part.empty(), errc::usage, "empty segment in sweep key " + key);
    if (cur->is_array()) {
      require(std::all_of(part.begin(), part.end(), [](char c) { return c >= '0' && c <= '9'; }), errc::usage,
              "sweep key segment '" + part + "' must index an array");
      const auto i = std::stoul(part);
      require(i < cur->size(), errc::usage, "sweep key index out of range: " + key);
      cur = &(*cur)[i];
    } else {
      require(cur->is_object() && cur->contains(part), errc::usage, "sweep key not found: " + key);
      cur = &(*cur)[part];
    }
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  bool numeric = cur->is_number();
  if (cur->is_string()) {
    try {
      Fixed::parse(cur->get<std::string>());
      numeric = true;
    } catch (const error&) {
    }
  }
  require(numeric, errc::usage, "sweep key does not address a numeric field: " + key);
  return *cur;
}

struct SweepRow {
  Fixed value{};
  json summary;
  std::string error;
};

/// One sub-run per value, each in its own directory under `out`, spread over
/// `threads` workers. Returns rows in value order.
inline std::vector<SweepRow> run_sweep(const json& doc, const SweepSpec& spec, const std::filesystem::path& out,
                                       unsigned threads) {
  {
    json probe = doc;
    sweep_target(probe, spec.key);
  }
  const auto values = spec.values();
  std::vector<SweepRow> rows(values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < values.size(); i = next++) {
      rows[i].value = values[i];
      try {
        json d = doc;
        sweep_target(d, spec.key) = values[i].str();
        Engine e(load_scenario(d));
        e.run();
        write_trace(e, out / ("run_" + std::to_string(i)));
        rows[i].summary = e.summary();
      } catch (const std::exception& ex) {
        rows[i].error = ex.what();
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(values.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return rows;
}

inline std::string sweep_csv(const std::string& key, const std::vector<SweepRow>& rows) {
  std::set<std::string> cols;
  for (const auto& r : rows)
    for (const auto& [k, v] : r.summary.items()) cols.insert(k);
  std::string out = key;
  for (const auto& c : cols) out += "," + c;
  out += ",error\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out += r.value.str();
    for (const auto& c : cols) {
      out += ",";
      if (!r.summary.contains(c)) continue;
      const json& v = r.summary[c];
      out += v.is_string() ? v.get<std::string>() : v.dump();
    }
    out += "," + r.error + "\n";
  }
  return out;
}

}  // namespace rugsim::harness
