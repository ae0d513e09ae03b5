#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "rugsim/core/error.hpp"
#include "rugsim/harness/engine.hpp"

namespace rugsim::harness {

inline constexpr const char* kEventsFile = "events.jsonl";
inline constexpr const char* kTelemetryFile = "telemetry.csv";
inline constexpr const char* kStateFile = "state.json";
inline constexpr const char* kHashFile = "hash.txt";

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  require(out.good(), errc::load, "cannot write " + p.string());
  return out;
}

}  // namespace detail

/// Writes the four trace files into `dir`, creating it if needed.
inline void write_trace(const Engine& e, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, errc::load, "cannot create output directory " + dir.string());
  {
    auto out = detail::open_out(dir / kEventsFile);
    for (const auto& line : e.events()) out << line << '\n';
  }
  {
    auto out = detail::open_out(dir / kTelemetryFile);
    out << kTelemetryHeader << '\n';
    for (const auto& row : e.telemetry()) out << to_csv(row) << '\n';
  }
  {
    auto out = detail::open_out(dir / kStateFile);
    out << e.state_snapshot().dump(2) << '\n';
  }
  {
    auto out = detail::open_out(dir / kHashFile);
    out << e.trace_hash() << '\n';
  }
}

inline std::string read_text_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  require(in.good(), errc::load, "cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace rugsim::harness
