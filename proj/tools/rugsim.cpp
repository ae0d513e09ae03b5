// rugsim: run scenarios, sweep parameters, verify traces, export figure data.
//
// Exit codes: 0 ok, 2 input error, 3 failed events under --strict,
// 4 trace verification failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "rugsim/rugsim.hpp"

namespace fs = std::filesystem;
using namespace rugsim;
using namespace rugsim::harness;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 2;
constexpr int kStrictFailure = 3;
constexpr int kVerifyFailure = 4;

std::string default_out() {
  const char* env = std::getenv("RUGSIM_OUT");
  return env != nullptr && *env != '\0' ? env : "rugsim-out";
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  require(out.good(), errc::load, "cannot write " + p.string());
  out << text;
}

int cmd_run(const std::string& scenario, const std::string& out, std::optional<std::uint64_t> blocks,
            std::optional<std::uint64_t> seed, bool strict) {
  json doc = read_json_file(scenario);
  if (seed) doc["seed"] = *seed;
  if (blocks) doc["blocks"] = *blocks;
  Engine e(load_scenario(doc));
  e.run();
  write_trace(e, out);
  std::cout << "blocks " << e.height() << ", events " << e.events().size() << ", failed " << e.failed_events()
            << ", trace_hash " << e.trace_hash() << "\n";
  if (strict && e.failed_events() > 0) {
    std::cerr << "strict: " << e.failed_events() << " failed event(s)\n";
    return kStrictFailure;
  }
  return kOk;
}

int cmd_sweep(const std::string& scenario, const std::string& param, const std::string& out, unsigned threads) {
  const json doc = read_json_file(scenario);
  const SweepSpec spec = parse_sweep(param);
  const auto rows = run_sweep(doc, spec, out, threads);
  write_file(fs::path(out) / "summary.csv", sweep_csv(spec.key, rows));
  int failed = 0;
  for (const auto& r : rows)
    if (!r.error.empty()) {
      std::cerr << spec.key << "=" << r.value.str() << ": " << r.error << "\n";
      ++failed;
    }
  std::cout << rows.size() << " sub-runs written to " << out << "\n";
  return failed > 0 ? kInputError : kOk;
}

int cmd_figures(const std::string& which, const std::string& out) {
  if (which == "all") {
    for (const auto key : figures::kFigureKeys)
      write_file(fs::path(out) / (std::string(key) + ".csv"), figures::to_csv(figures::figure(key)));
  } else {
    write_file(fs::path(out) / (which + ".csv"), figures::to_csv(figures::figure(which)));
  }
  return kOk;
}

int cmd_verify(const std::string& trace) {
  const auto rep = verify_trace(trace);
  if (!rep.ok) {
    std::cerr << "verification failed";
    if (rep.first_bad_seq) std::cerr << " at event " << *rep.first_bad_seq;
    std::cerr << ": " << rep.message << "\n";
    return kVerifyFailure;
  }
  std::cout << "ok: " << rep.events << " events\n";
  return kOk;
}

int cmd_regen_golden(const std::string& scenario, const std::string& golden) {
  const auto m = scam_margins(load_scenario_file(scenario));
  write_file(golden, m.to_json().dump(2) + "\n");
  std::cout << "intent margin " << m.intent.str() << ", front-run margin " << m.frontrun.str() << " -> " << golden
            << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rug-pull recovery protocol simulator"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out = default_out();
  std::optional<std::uint64_t> blocks;
  std::optional<std::uint64_t> seed;
  bool strict = false;
  auto* run = app.add_subcommand("run", "Run a scenario and write its trace");
  run->add_option("--scenario", scenario, "Scenario JSON file")->required();
  run->add_option("--out", out, "Output directory (default $RUGSIM_OUT or ./rugsim-out)");
  run->add_option("--blocks", blocks, "Override the block count")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Override the seed");
  run->add_flag("--strict", strict, "Exit 3 if any event failed");

  std::string param;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep = app.add_subcommand("sweep", "Run one sub-run per parameter value");
  sweep->add_option("--scenario", scenario, "Scenario JSON file")->required();
  sweep->add_option("--param", param, "KEY=A:B:STEP, KEY a dotted path into the scenario")->required();
  sweep->add_option("--out", out, "Output directory");
  sweep->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  std::string trace;
  bool regen = false;
  std::string golden = "tests/golden/scam_margin.json";
  auto* verify = app.add_subcommand("verify", "Check a trace, or regenerate the pinned scam margins");
  verify->add_option("--trace", trace, "Trace directory");
  verify->add_flag("--regen-golden", regen, "Recompute the scam margins and write them to --golden");
  verify->add_option("--scenario", scenario, "Scam scenario for --regen-golden")
      ->default_val("scenarios/scam.json");
  verify->add_option("--golden", golden, "Golden file for --regen-golden");

  std::string which;
  auto* figs = app.add_subcommand("figures", "Export figure data as CSV");
  figs->add_option("--which", which, "peg, supply, whale, cumulative or all")->required();
  figs->add_option("--out", out, "Output directory");

  app.add_subcommand("schema", "Print the scenario schema");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  try {
    if (app.got_subcommand(run)) return cmd_run(scenario, out, blocks, seed, strict);
    if (app.got_subcommand(sweep)) return cmd_sweep(scenario, param, out, threads);
    if (app.got_subcommand(figs)) return cmd_figures(which, out);
    if (app.got_subcommand(verify)) {
      if (regen) return cmd_regen_golden(scenario, golden);
      if (trace.empty()) {
        std::cerr << "verify needs --trace DIR or --regen-golden\n";
        return kInputError;
      }
      return cmd_verify(trace);
    }
    std::cout << kScenarioSchema;
    return kOk;
  } catch (const error& e) {
    std::cerr << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
}
