#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rugsim/core/error.hpp"
#include "rugsim/core/fixed.hpp"
#include "rugsim/core/ids.hpp"
#include "rugsim/detection.hpp"
#include "rugsim/insurance.hpp"
#include "rugsim/market.hpp"
#include "rugsim/perps.hpp"
#include "rugsim/rugproof.hpp"
#include "rugsim/tokenomics.hpp"
#include "rugsim/vault.hpp"

namespace rugsim::harness {

using json = nlohmann::json;

enum class AgentKind { Creator, Retail, Whale, LP, Solver, Liquidator, PegKeeper, Detector };

inline std::string_view to_string(AgentKind k) {
  switch (k) {
    case AgentKind::Creator: return "Creator";
    case AgentKind::Retail: return "Retail";
    case AgentKind::Whale: return "Whale";
    case AgentKind::LP: return "LP";
    case AgentKind::Solver: return "Solver";
    case AgentKind::Liquidator: return "Liquidator";
    case AgentKind::PegKeeper: return "PegKeeper";
    case AgentKind::Detector: return "Detector";
  }
  return "?";
}

struct ChainSpec {
  ChainId id{};
  std::string name;
};

struct TokenSpec {
  std::string symbol;
  ChainId chain{};
  std::optional<market::PriceProcess> process;
  std::optional<Fixed> price;  // constant price in numeraire
};

struct AccountSpec {
  std::string name;
  std::string owner;
  std::vector<std::pair<std::string, Fixed>> balances;
};

struct PoolSpec {
  std::string name;
  ChainId chain{};
  std::string x;
  std::string y;
  int fee_bps = 30;
  Fixed reserve_x{};
  Fixed reserve_y{};
};

struct VaultSpec {
  std::string name;
  ChainId chain{};
  std::string token;
  vault::VaultParams params;
  std::optional<std::string> amm_pool;  // anticoin/numeraire pool used for liquidations
};

struct ScriptOp {
  std::uint64_t at = 0;
  std::string op;
  json args;
  std::string path;  // location in the scenario, for error messages
};

struct NoiseSpec {
  std::string pool;
  Fixed probability{};
  Fixed max_amount{};
};

struct AgentSpec {
  std::string name;
  AgentKind kind = AgentKind::Retail;
  std::string account;
  ChainId chain{};
  std::vector<ScriptOp> script;
  std::optional<NoiseSpec> noise;
  int fee_bps = 0;  // Solver bid
  // PegKeeper
  std::string peg_pool;
  std::string peg_vault;
  Fixed peg_budget{};
  // Detector
  std::vector<std::string> monitor_pools;
  std::vector<std::string> protect;
  bool frontrun = true;
  Fixed sandwich_budget{};
  Fixed backrun_budget{};
  Fixed backrun_cap{};
  bool deposit_salvage = true;
};

struct PerpsSpec {
  perps::PerpsConfig config;
  perps::FundingParams funding;
  perps::MaintenanceRule maintenance;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  std::uint64_t blocks = 1;
  std::vector<ChainSpec> chains;
  ChainId rugsafe_chain{};
  std::uint64_t bridge_delay = 1;
  std::string numeraire;
  std::vector<TokenSpec> tokens;
  std::vector<AccountSpec> accounts;
  std::vector<PoolSpec> pools;
  std::vector<VaultSpec> vaults;
  tokenomics::SupplyParams supply;
  Fixed initial_supply{};
  PerpsSpec perps;
  rugproof::SlashParams rugproof;
  insurance::InsuranceParams insurance;
  detection::MonitorConfig monitor;
  market::PegKeeperConfig peg_keeper;
  int protocol_priority = 10;
  std::vector<AgentSpec> agents;
};

/// Anticoin symbol for a vault's rugged token.
inline std::string anticoin_symbol(const std::string& rugged) { return rugged + ".ca"; }
inline constexpr const char* kRugsafeSymbol = "RSF";

// ---------------------------------------------------------------------------
// Loader

namespace detail {

[[noreturn]] inline void load_fail(const std::string& path, const std::string& msg) {
  fail(errc::load, "load error at " + (path.empty() ? std::string("/") : path) + ": " + msg);
}

/// Cursor into the document that remembers its JSON-pointer path.
class Node {
 public:
  Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const json& raw() const { return *j_; }
  const std::string& path() const { return path_; }
  bool has(const char* key) const { return j_->is_object() && j_->contains(key); }

  Node at(const char* key) const {
    if (!j_->is_object()) load_fail(path_, "expected an object");
    if (!j_->contains(key)) load_fail(path_ + "/" + key, "missing required key");
    return Node((*j_)[key], path_ + "/" + key);
  }
  Node at(std::size_t i) const { return Node((*j_)[i], path_ + "/" + std::to_string(i)); }

  std::size_t size() const {
    if (!j_->is_array()) load_fail(path_, "expected an array");
    return j_->size();
  }

  void require_object() const {
    if (!j_->is_object()) load_fail(path_, "expected an object");
  }

  void only_keys(std::initializer_list<const char*> keys) const {
    require_object();
    for (const auto& [k, v] : j_->items()) {
      bool known = false;
      for (const char* allowed : keys) known = known || k == allowed;
      if (!known) load_fail(path_ + "/" + k, "unknown key");
    }
  }

  std::string str() const {
    if (!j_->is_string()) load_fail(path_, "expected a string");
    return j_->get<std::string>();
  }

  Fixed fixed() const {
    try {
      if (j_->is_string()) return Fixed::parse(j_->get<std::string>());
      if (j_->is_number()) return Fixed::parse(j_->dump());
    } catch (const error& e) {
      load_fail(path_, e.what());
    }
    load_fail(path_, "expected a decimal number or numeric string");
  }

  std::uint64_t u64() const {
    if (j_->is_number_unsigned()) return j_->get<std::uint64_t>();
    if (j_->is_number_integer() && j_->get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j_->get<std::int64_t>());
    load_fail(path_, "expected a non-negative integer");
  }

  int integer() const {
    if (j_->is_number_integer()) return j_->get<int>();
    load_fail(path_, "expected an integer");
  }

  bool boolean() const {
    if (!j_->is_boolean()) load_fail(path_, "expected a boolean");
    return j_->get<bool>();
  }

  template <class F>
  void fixed_opt(const char* key, Fixed& out, F&& check) const {
    if (has(key)) {
      out = at(key).fixed();
      try {
        check(out);
      } catch (const error& e) {
        load_fail(path_ + "/" + key, e.what());
      }
    }
  }
  void fixed_opt(const char* key, Fixed& out) const {
    if (has(key)) out = at(key).fixed();
  }
  void u64_opt(const char* key, std::uint64_t& out) const {
    if (has(key)) out = at(key).u64();
  }
  void int_opt(const char* key, int& out) const {
    if (has(key)) out = at(key).integer();
  }
  void bool_opt(const char* key, bool& out) const {
    if (has(key)) out = at(key).boolean();
  }

 private:
  const json* j_;
  std::string path_;
};

/// Runs a module validator and reports its failure at `path`.
template <class F>
void check_at(const std::string& path, F&& f) {
  try {
    f();
  } catch (const error& e) {
    load_fail(path, e.what());
  }
}

inline market::PriceProcess parse_process(const Node& n) {
  n.only_keys({"kind", "p0", "tau_rug", "lambda", "alpha_sent", "epsilon_floor", "onset"});
  market::PriceProcess p;
  const std::string kind = n.at("kind").str();
  if (kind == "scam")
    p.kind = market::PriceKind::Scam;
  else if (kind == "catastrophic")
    p.kind = market::PriceKind::Catastrophic;
  else if (kind == "sentiment")
    p.kind = market::PriceKind::Sentiment;
  else
    load_fail(n.path() + "/kind", "unknown price process kind '" + kind + "'");
  n.fixed_opt("p0", p.p0);
  n.fixed_opt("tau_rug", p.tau_rug);
  n.fixed_opt("lambda", p.lambda);
  n.fixed_opt("alpha_sent", p.alpha_sent);
  n.fixed_opt("epsilon_floor", p.epsilon_floor);
  n.u64_opt("onset", p.onset);
  check_at(n.path(), [&] { market::validate(p); });
  return p;
}

inline vault::VaultParams parse_vault_params(const Node& n) {
  n.only_keys({"receipt_kind", "omega", "theta", "penalty_k", "penalty_lambda", "gamma_base", "delta_gamma"});
  vault::VaultParams p;
  if (n.has("receipt_kind")) {
    const std::string k = n.at("receipt_kind").str();
    if (k == "fungible")
      p.receipt_kind = vault::ReceiptKind::Fungible;
    else if (k == "nonfungible")
      p.receipt_kind = vault::ReceiptKind::NonFungible;
    else if (k == "refungible")
      p.receipt_kind = vault::ReceiptKind::Refungible;
    else
      load_fail(n.path() + "/receipt_kind", "unknown receipt kind '" + k + "'");
  }
  n.fixed_opt("omega", p.omega);
  n.fixed_opt("theta", p.theta);
  n.fixed_opt("penalty_k", p.penalty_k);
  n.fixed_opt("penalty_lambda", p.penalty_lambda);
  n.fixed_opt("gamma_base", p.gamma_base);
  n.fixed_opt("delta_gamma", p.delta_gamma);
  // Report the key most likely at fault.
  if (!(p.theta > p.omega)) load_fail(n.path() + "/theta", "theta must exceed omega");
  if (!(p.penalty_lambda > Fixed::from_int(1))) load_fail(n.path() + "/penalty_lambda", "penalty lambda must exceed 1");
  check_at(n.path(), [&] { vault::validate(p); });
  return p;
}

inline AgentKind parse_agent_kind(const Node& n) {
  static const std::map<std::string, AgentKind> kinds{
      {"Creator", AgentKind::Creator},       {"Retail", AgentKind::Retail},   {"Whale", AgentKind::Whale},
      {"LP", AgentKind::LP},                 {"Solver", AgentKind::Solver},   {"Liquidator", AgentKind::Liquidator},
      {"PegKeeper", AgentKind::PegKeeper},   {"Detector", AgentKind::Detector}};
  const std::string k = n.str();
  auto it = kinds.find(k);
  if (it == kinds.end()) load_fail(n.path(), "unknown agent kind '" + k + "'");
  return it->second;
}

/// Required argument keys and their reference kinds for each script op.
enum class Ref { None, Pool, Vault, Token, Account, Number, Text };

struct OpShape {
  std::vector<std::pair<const char*, Ref>> required;
  std::vector<std::pair<const char*, Ref>> optional;
};

inline const std::map<std::string, OpShape>& op_shapes() {
  static const std::map<std::string, OpShape> shapes{
      {"drain", {{{"pool", Ref::Pool}}, {{"amount", Ref::Text}, {"window", Ref::Number}, {"priority", Ref::Number}}}},
      {"swap", {{{"pool", Ref::Pool}, {"token", Ref::Token}, {"amount", Ref::Text}}, {}}},
      {"add_liquidity", {{{"pool", Ref::Pool}, {"amount_x", Ref::Number}, {"amount_y", Ref::Number}}, {}}},
      {"remove_liquidity", {{{"pool", Ref::Pool}, {"share", Ref::Number}}, {}}},
      {"mint", {{{"token", Ref::Token}, {"amount", Ref::Number}}, {}}},
      {"transfer", {{{"to", Ref::Account}, {"token", Ref::Token}, {"amount", Ref::Number}}, {}}},
      {"deposit", {{{"vault", Ref::Vault}, {"amount", Ref::Text}}, {}}},
      {"burn", {{{"vault", Ref::Vault}, {"amount", Ref::Text}}, {}}},
      {"withdraw", {{{"vault", Ref::Vault}, {"amount", Ref::Text}}, {}}},
      {"intent",
       {{{"pool", Ref::Pool}, {"token", Ref::Token}, {"theta_price", Ref::Number}, {"theta_liquidity", Ref::Number}},
        {{"action", Ref::Text}, {"max_fee_bps", Ref::Number}, {"vault", Ref::Vault}}}},
      {"open_position",
       {{{"vault", Ref::Vault}, {"collateral", Ref::Number}, {"leverage", Ref::Number}, {"direction", Ref::Text}}, {}}},
      {"close_position", {{{"vault", Ref::Vault}}, {{"index", Ref::Number}}}},
      {"issue_bonded", {{{"token", Ref::Token}, {"total", Ref::Number}, {"fraction", Ref::Number}}, {}}},
      {"rug_claim", {{{"token", Ref::Token}, {"fraction", Ref::Number}}, {}}},
      {"vote_rug", {{{"token", Ref::Token}, {"deposit", Ref::Number}, {"side", Ref::Text}}, {}}},
      {"issue_policy",
       {{{"insured", Ref::Account},
         {"token", Ref::Token},
         {"value", Ref::Number},
         {"fraction", Ref::Number},
         {"duration", Ref::Number}},
        {}}},
      {"claim_insurance", {{{"policy", Ref::Number}, {"fraction", Ref::Number}}, {{"loss", Ref::Number}}}},
      {"join_claim", {{{"policy", Ref::Number}, {"loss", Ref::Number}, {"fraction", Ref::Number}}, {}}},
      {"dispute_claim", {{{"policy", Ref::Number}, {"fraction", Ref::Number}}, {}}},
      {"vote_claim", {{{"policy", Ref::Number}, {"deposit", Ref::Number}, {"side", Ref::Text}}, {}}},
      {"escalate", {{{"policy", Ref::Number}}, {}}},
  };
  return shapes;
}

}  // namespace detail

/// Parses and validates a scenario document. Every name reference is
/// resolved and every module parameter block checked before returning.
inline Scenario load_scenario(const json& doc) {
  using detail::load_fail;
  using detail::Node;
  const Node root(doc, "");
  root.only_keys({"name", "seed", "blocks", "chains", "rugsafe_chain", "bridge_delay", "numeraire", "tokens",
                  "accounts", "pools", "vaults", "supply", "perps", "rugproof", "insurance", "detection",
                  "peg_keeper", "protocol_priority", "agents"});
  Scenario sc;
  if (root.has("name")) sc.name = root.at("name").str();
  sc.seed = root.at("seed").u64();
  root.u64_opt("blocks", sc.blocks);
  if (sc.blocks < 1) load_fail("/blocks", "must be at least 1");

  std::set<std::uint32_t> chain_ids;
  const Node chains = root.at("chains");
  if (chains.size() == 0) load_fail("/chains", "at least one chain is required");
  for (std::size_t i = 0; i < chains.size(); ++i) {
    const Node c = chains.at(i);
    c.only_keys({"id", "name"});
    ChainSpec cs;
    cs.id = ChainId{static_cast<std::uint32_t>(c.at("id").u64())};
    if (c.has("name")) cs.name = c.at("name").str();
    if (!chain_ids.insert(cs.id.value).second) load_fail(c.path() + "/id", "duplicate chain id");
    sc.chains.push_back(cs);
  }
  auto chain_ref = [&](const Node& n) {
    const auto id = static_cast<std::uint32_t>(n.u64());
    if (!chain_ids.contains(id)) load_fail(n.path(), "unknown chain " + std::to_string(id));
    return ChainId{id};
  };
  sc.rugsafe_chain = root.has("rugsafe_chain") ? chain_ref(root.at("rugsafe_chain")) : sc.chains.front().id;
  root.u64_opt("bridge_delay", sc.bridge_delay);
  sc.numeraire = root.at("numeraire").str();

  std::set<std::string> token_names{kRugsafeSymbol};
  const Node tokens = root.at("tokens");
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Node t = tokens.at(i);
    t.only_keys({"symbol", "chain", "process", "price"});
    TokenSpec ts;
    ts.symbol = t.at("symbol").str();
    if (ts.symbol.empty() || ts.symbol.ends_with(".ca") || ts.symbol == kRugsafeSymbol)
      load_fail(t.path() + "/symbol", "reserved or empty token symbol '" + ts.symbol + "'");
    if (!token_names.insert(ts.symbol).second) load_fail(t.path() + "/symbol", "duplicate token " + ts.symbol);
    ts.chain = t.has("chain") ? chain_ref(t.at("chain")) : sc.rugsafe_chain;
    if (t.has("process")) ts.process = detail::parse_process(t.at("process"));
    if (t.has("price")) {
      ts.price = t.at("price").fixed();
      if (!ts.price->is_positive()) load_fail(t.path() + "/price", "price must be positive");
    }
    sc.tokens.push_back(std::move(ts));
  }
  if (!token_names.contains(sc.numeraire)) load_fail("/numeraire", "numeraire token '" + sc.numeraire + "' not declared");

  // Vaults first so anticoin symbols resolve everywhere else.
  std::set<std::string> vault_names;
  std::set<std::string> vault_tokens;
  if (root.has("vaults")) {
    const Node vaults = root.at("vaults");
    for (std::size_t i = 0; i < vaults.size(); ++i) {
      const Node v = vaults.at(i);
      v.only_keys({"name", "chain", "token", "params", "amm_pool"});
      VaultSpec vs;
      vs.name = v.at("name").str();
      if (!vault_names.insert(vs.name).second) load_fail(v.path() + "/name", "duplicate vault " + vs.name);
      vs.chain = v.has("chain") ? chain_ref(v.at("chain")) : sc.rugsafe_chain;
      vs.token = v.at("token").str();
      if (!token_names.contains(vs.token) || vs.token == kRugsafeSymbol || vs.token.ends_with(".ca"))
        load_fail(v.path() + "/token", "unknown rugged token '" + vs.token + "'");
      if (!vault_tokens.insert(vs.token).second)
        load_fail(v.path() + "/token", "vault already exists for token " + vs.token);
      if (v.has("params")) vs.params = detail::parse_vault_params(v.at("params"));
      else detail::check_at(v.path(), [&] { vault::validate(vs.params); });
      if (v.has("amm_pool")) vs.amm_pool = v.at("amm_pool").str();
      sc.vaults.push_back(std::move(vs));
    }
    for (const auto& vs : sc.vaults) token_names.insert(anticoin_symbol(vs.token));
  }
  auto token_ref = [&](const Node& n) {
    const std::string s = n.str();
    if (!token_names.contains(s)) load_fail(n.path(), "unknown token '" + s + "'");
    return s;
  };

  std::set<std::string> account_names;
  if (root.has("accounts")) {
    const Node accounts = root.at("accounts");
    for (std::size_t i = 0; i < accounts.size(); ++i) {
      const Node a = accounts.at(i);
      a.only_keys({"name", "owner", "balances"});
      AccountSpec as;
      as.name = a.at("name").str();
      if (!account_names.insert(as.name).second) load_fail(a.path() + "/name", "duplicate account " + as.name);
      as.owner = a.has("owner") ? a.at("owner").str() : as.name;
      if (a.has("balances")) {
        const Node b = a.at("balances");
        b.require_object();
        for (const auto& [sym, val] : b.raw().items()) {
          const Node bn(val, b.path() + "/" + sym);
          if (!token_names.contains(sym) || sym.ends_with(".ca"))
            load_fail(bn.path(), "unknown or non-genesis token '" + sym + "'");
          const Fixed amt = bn.fixed();
          if (amt.is_negative()) load_fail(bn.path(), "balance must be non-negative");
          as.balances.emplace_back(sym, amt);
        }
      }
      sc.accounts.push_back(std::move(as));
    }
  }
  auto account_ref = [&](const Node& n) {
    const std::string s = n.str();
    if (!account_names.contains(s)) load_fail(n.path(), "unknown account '" + s + "'");
    return s;
  };

  std::set<std::string> pool_names;
  if (root.has("pools")) {
    const Node pools = root.at("pools");
    for (std::size_t i = 0; i < pools.size(); ++i) {
      const Node p = pools.at(i);
      p.only_keys({"name", "chain", "x", "y", "fee_bps", "reserve_x", "reserve_y"});
      PoolSpec ps;
      ps.name = p.at("name").str();
      if (!pool_names.insert(ps.name).second) load_fail(p.path() + "/name", "duplicate pool " + ps.name);
      ps.chain = p.has("chain") ? chain_ref(p.at("chain")) : sc.rugsafe_chain;
      ps.x = token_ref(p.at("x"));
      ps.y = token_ref(p.at("y"));
      if (ps.x == ps.y) load_fail(p.path() + "/y", "pool tokens must differ");
      p.int_opt("fee_bps", ps.fee_bps);
      if (ps.fee_bps < 0 || ps.fee_bps >= 10'000) load_fail(p.path() + "/fee_bps", "fee_bps must be in [0, 10000)");
      p.fixed_opt("reserve_x", ps.reserve_x);
      p.fixed_opt("reserve_y", ps.reserve_y);
      if (ps.reserve_x.is_negative() || ps.reserve_y.is_negative() ||
          ps.reserve_x.is_positive() != ps.reserve_y.is_positive())
        load_fail(p.path(), "reserves must be both zero or both positive");
      if (ps.reserve_x.is_positive() &&
          (ps.x.ends_with(".ca") || ps.y.ends_with(".ca") || ps.x == kRugsafeSymbol || ps.y == kRugsafeSymbol))
        load_fail(p.path() + "/reserve_x", "pools holding protocol-issued tokens must start empty");
      sc.pools.push_back(std::move(ps));
    }
  }
  auto pool_ref = [&](const Node& n) {
    const std::string s = n.str();
    if (!pool_names.contains(s)) load_fail(n.path(), "unknown pool '" + s + "'");
    return s;
  };
  for (std::size_t i = 0; i < sc.vaults.size(); ++i)
    if (sc.vaults[i].amm_pool && !pool_names.contains(*sc.vaults[i].amm_pool))
      load_fail("/vaults/" + std::to_string(i) + "/amm_pool", "unknown pool '" + *sc.vaults[i].amm_pool + "'");
  auto vault_ref = [&](const Node& n) {
    const std::string s = n.str();
    if (!vault_names.contains(s)) load_fail(n.path(), "unknown vault '" + s + "'");
    return s;
  };

  if (root.has("supply")) {
    const Node s = root.at("supply");
    s.only_keys({"s0", "epsilon_rate", "beta_burn", "kappa", "initial_supply"});
    s.fixed_opt("s0", sc.supply.s0);
    s.fixed_opt("epsilon_rate", sc.supply.epsilon_rate);
    s.fixed_opt("beta_burn", sc.supply.beta_burn);
    s.fixed_opt("kappa", sc.supply.kappa);
    s.fixed_opt("initial_supply", sc.initial_supply);
    if (sc.initial_supply.is_negative()) load_fail(s.path() + "/initial_supply", "must be non-negative");
    detail::check_at(s.path(), [&] { sc.supply.validate(); });
  }
  if (root.has("perps")) {
    const Node p = root.at("perps");
    p.only_keys({"leverage_max", "live_revaluation", "alpha_base", "l_min", "interval_blocks", "maintenance_fraction",
                 "liquidator_deadline_blocks", "liquidator_fee_fraction"});
    p.fixed_opt("leverage_max", sc.perps.config.leverage_max);
    p.bool_opt("live_revaluation", sc.perps.config.live_revaluation);
    p.fixed_opt("alpha_base", sc.perps.funding.alpha_base);
    p.fixed_opt("l_min", sc.perps.funding.l_min);
    p.u64_opt("interval_blocks", sc.perps.funding.interval_blocks);
    p.fixed_opt("maintenance_fraction", sc.perps.maintenance.maintenance_fraction);
    p.u64_opt("liquidator_deadline_blocks", sc.perps.maintenance.liquidator_deadline_blocks);
    p.fixed_opt("liquidator_fee_fraction", sc.perps.maintenance.liquidator_fee_fraction);
    if (sc.perps.config.leverage_max < Fixed::from_int(1)) load_fail(p.path() + "/leverage_max", "must be at least 1");
    detail::check_at(p.path(), [&] {
      sc.perps.funding.validate();
      sc.perps.maintenance.validate();
    });
  }
  if (root.has("rugproof")) {
    const Node r = root.at("rugproof");
    r.only_keys({"alpha_slash", "gamma_slash", "claimant_share", "z_min", "challenge_blocks", "x_min",
                 "forfeit_losing_deposits"});
    r.fixed_opt("alpha_slash", sc.rugproof.alpha_slash);
    r.fixed_opt("gamma_slash", sc.rugproof.gamma_slash);
    r.fixed_opt("claimant_share", sc.rugproof.claimant_share);
    r.fixed_opt("z_min", sc.rugproof.z_min);
    r.u64_opt("challenge_blocks", sc.rugproof.challenge_blocks);
    r.fixed_opt("x_min", sc.rugproof.x_min);
    r.bool_opt("forfeit_losing_deposits", sc.rugproof.forfeit_losing_deposits);
    detail::check_at(r.path(), [&] { sc.rugproof.validate(); });
  }
  if (root.has("insurance")) {
    const Node r = root.at("insurance");
    r.only_keys({"alpha_comp", "gamma_pen", "escalation_bond_multiplier", "max_escalations", "x_min", "z_min",
                 "tau_challenge", "tau_vote"});
    r.fixed_opt("alpha_comp", sc.insurance.alpha_comp);
    r.fixed_opt("gamma_pen", sc.insurance.gamma_pen);
    r.fixed_opt("escalation_bond_multiplier", sc.insurance.escalation_bond_multiplier);
    r.int_opt("max_escalations", sc.insurance.max_escalations);
    r.fixed_opt("x_min", sc.insurance.x_min);
    r.fixed_opt("z_min", sc.insurance.z_min);
    r.u64_opt("tau_challenge", sc.insurance.tau_challenge);
    r.u64_opt("tau_vote", sc.insurance.tau_vote);
    detail::check_at(r.path(), [&] { sc.insurance.validate(); });
  }
  if (root.has("detection")) {
    const Node d = root.at("detection");
    d.only_keys({"drop_threshold", "mint_spike_factor", "wallet_outflow_fraction", "volume_spike_factor", "window"});
    d.fixed_opt("drop_threshold", sc.monitor.drop_threshold);
    d.fixed_opt("mint_spike_factor", sc.monitor.mint_spike_factor);
    d.fixed_opt("wallet_outflow_fraction", sc.monitor.wallet_outflow_fraction);
    d.fixed_opt("volume_spike_factor", sc.monitor.volume_spike_factor);
    if (d.has("window")) sc.monitor.window = d.at("window").u64();
    detail::check_at(d.path(), [&] { sc.monitor.validate(); });
  }
  if (root.has("peg_keeper")) {
    const Node p = root.at("peg_keeper");
    p.only_keys({"tolerance", "max_iterations"});
    p.fixed_opt("tolerance", sc.peg_keeper.tolerance);
    p.int_opt("max_iterations", sc.peg_keeper.max_iterations);
    if (!sc.peg_keeper.tolerance.is_positive() || sc.peg_keeper.max_iterations < 1)
      load_fail(p.path(), "tolerance and max_iterations must be positive");
  }
  root.int_opt("protocol_priority", sc.protocol_priority);

  std::set<std::string> agent_names;
  if (root.has("agents")) {
    const Node agents = root.at("agents");
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const Node a = agents.at(i);
      a.only_keys({"name", "kind", "account", "chain", "script", "noise", "fee_bps", "pool", "vault", "budget",
                   "pools", "protect", "frontrun", "sandwich_budget", "backrun_budget", "backrun_cap",
                   "deposit_salvage"});
      AgentSpec ag;
      ag.name = a.at("name").str();
      if (!agent_names.insert(ag.name).second) load_fail(a.path() + "/name", "duplicate agent " + ag.name);
      ag.kind = detail::parse_agent_kind(a.at("kind"));
      ag.account = account_ref(a.at("account"));
      ag.chain = a.has("chain") ? chain_ref(a.at("chain")) : sc.rugsafe_chain;
      if (a.has("script")) {
        const Node s = a.at("script");
        for (std::size_t j = 0; j < s.size(); ++j) {
          const Node op = s.at(j);
          op.require_object();
          ScriptOp so;
          so.at = op.at("at").u64();
          so.op = op.at("op").str();
          so.path = op.path();
          auto shape_it = detail::op_shapes().find(so.op);
          if (shape_it == detail::op_shapes().end()) load_fail(op.path() + "/op", "unknown op '" + so.op + "'");
          const auto& shape = shape_it->second;
          auto check_ref = [&](const char* key, detail::Ref ref) {
            const Node v = op.at(key);
            switch (ref) {
              case detail::Ref::Pool: pool_ref(v); break;
              case detail::Ref::Vault: vault_ref(v); break;
              case detail::Ref::Token: token_ref(v); break;
              case detail::Ref::Account: account_ref(v); break;
              case detail::Ref::Number: v.fixed(); break;
              case detail::Ref::Text:
                if (!v.raw().is_string() && !v.raw().is_number()) load_fail(v.path(), "expected a string or number");
                break;
              case detail::Ref::None: break;
            }
          };
          for (const auto& [key, ref] : shape.required) check_ref(key, ref);
          for (const auto& [key, ref] : shape.optional)
            if (op.has(key)) check_ref(key, ref);
          for (const auto& [k, v] : op.raw().items()) {
            if (k == "at" || k == "op") continue;
            bool known = false;
            for (const auto& r : shape.required) known = known || k == r.first;
            for (const auto& r : shape.optional) known = known || k == r.first;
            if (!known) load_fail(op.path() + "/" + k, "unknown argument for op '" + so.op + "'");
          }
          so.args = op.raw();
          ag.script.push_back(std::move(so));
        }
      }
      if (a.has("noise")) {
        const Node n = a.at("noise");
        n.only_keys({"pool", "probability", "max_amount"});
        NoiseSpec ns;
        ns.pool = pool_ref(n.at("pool"));
        ns.probability = n.at("probability").fixed();
        ns.max_amount = n.at("max_amount").fixed();
        if (ns.probability.is_negative() || ns.probability > Fixed::from_int(1))
          load_fail(n.path() + "/probability", "must be in [0, 1]");
        if (!ns.max_amount.is_positive()) load_fail(n.path() + "/max_amount", "must be positive");
        ag.noise = ns;
      }
      a.int_opt("fee_bps", ag.fee_bps);
      if (ag.fee_bps < 0 || ag.fee_bps > 10'000) load_fail(a.path() + "/fee_bps", "must be in [0, 10000]");
      if (ag.kind == AgentKind::PegKeeper) {
        ag.peg_pool = pool_ref(a.at("pool"));
        ag.peg_vault = vault_ref(a.at("vault"));
        ag.peg_budget = a.at("budget").fixed();
        if (!ag.peg_budget.is_positive()) load_fail(a.path() + "/budget", "must be positive");
      }
      if (ag.kind == AgentKind::Detector) {
        if (a.has("pools")) {
          const Node ps = a.at("pools");
          for (std::size_t j = 0; j < ps.size(); ++j) ag.monitor_pools.push_back(pool_ref(ps.at(j)));
        }
        if (a.has("protect")) {
          const Node ps = a.at("protect");
          for (std::size_t j = 0; j < ps.size(); ++j) ag.protect.push_back(account_ref(ps.at(j)));
        }
        a.bool_opt("frontrun", ag.frontrun);
        a.fixed_opt("sandwich_budget", ag.sandwich_budget);
        a.fixed_opt("backrun_budget", ag.backrun_budget);
        a.fixed_opt("backrun_cap", ag.backrun_cap);
        a.bool_opt("deposit_salvage", ag.deposit_salvage);
        if (ag.sandwich_budget.is_negative() || ag.backrun_budget.is_negative() || ag.backrun_cap.is_negative())
          load_fail(a.path(), "detector budgets must be non-negative");
      }
      sc.agents.push_back(std::move(ag));
    }
  }
  return sc;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::load, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(errc::load, "malformed JSON in " + path + ": " + e.what());
  }
}

inline Scenario load_scenario_file(const std::string& path) { return load_scenario(read_json_file(path)); }

}  // namespace rugsim::harness
