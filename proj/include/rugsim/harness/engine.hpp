#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "rugsim/core/error.hpp"
#include "rugsim/core/fixed.hpp"
#include "rugsim/core/hash.hpp"
#include "rugsim/core/ids.hpp"
#include "rugsim/core/ledger.hpp"
#include "rugsim/core/rng.hpp"
#include "rugsim/detection.hpp"
#include "rugsim/harness/scenario.hpp"
#include "rugsim/insurance.hpp"
#include "rugsim/market.hpp"
#include "rugsim/perps.hpp"
#include "rugsim/rugproof.hpp"
#include "rugsim/settle.hpp"
#include "rugsim/tokenomics.hpp"
#include "rugsim/vault.hpp"

namespace rugsim::harness {

/// Block phases, in execution order.
enum Phase : int {
  kGenesis = 0,
  kPrices = 1,
  kDetection = 2,
  kExecution = 3,
  kVaultOps = 4,
  kPerps = 5,
  kDeadlines = 6,
  kBridge = 7,
  kTokenomics = 8,
  kTelemetry = 9,
};

struct TelemetryRow {
  ChainId chain{};
  std::uint64_t height = 0;
  Fixed emission{};  // all R minted this block: block emission plus bridged rewards
  Fixed burned{};
  std::optional<Fixed> current_supply;  // Rugsafe chain only
  std::optional<Fixed> target_supply;
  Fixed reward_minted{};
  std::uint64_t failed_events = 0;
};

inline constexpr const char* kTelemetryHeader =
    "chain,height,emission,burned,current_supply,target_supply,reward_minted,failed_events";

inline std::string to_csv(const TelemetryRow& r) {
  return std::to_string(r.chain.value) + "," + std::to_string(r.height) + "," + r.emission.str() + "," +
         r.burned.str() + "," + (r.current_supply ? r.current_supply->str() : "") + "," +
         (r.target_supply ? r.target_supply->str() : "") + "," + r.reward_minted.str() + "," +
         std::to_string(r.failed_events);
}

class Engine {
 public:
  explicit Engine(Scenario sc)
      : sc_(std::move(sc)),
        rugproof_(AccountId{}, AccountId{}, sc_.rugproof),
        insurance_(AccountId{}, sc_.insurance) {
    genesis();
  }

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const Scenario& scenario() const { return sc_; }
  std::uint64_t height() const { return height_; }
  const Ledger& ledger() const { return ledger_; }
  const std::vector<std::string>& events() const { return events_; }
  const std::vector<TelemetryRow>& telemetry() const { return telemetry_; }
  std::uint64_t failed_events() const { return failed_total_; }
  const tokenomics::SupplyState& supply_state() const { return supply_; }
  const rugproof::RugproofBook& rugproof() const { return rugproof_; }
  const insurance::InsuranceBook& insurance() const { return insurance_; }
  const detection::IntentBook& intents() const { return intents_; }
  std::string trace_hash() const { return hasher_.hex(); }

  TokenId token(const std::string& symbol) const {
    auto it = token_ids_.find(symbol);
    require(it != token_ids_.end(), errc::not_found, "unknown token " + symbol);
    return it->second;
  }
  const std::string& symbol(TokenId t) const { return token_symbols_.at(t.value - 1); }
  AccountId account(const std::string& name) const {
    auto it = account_ids_.find(name);
    require(it != account_ids_.end(), errc::not_found, "unknown account " + name);
    return it->second;
  }
  const market::PoolState& pool(const std::string& name) const { return pools_.at(pool_index(name)).state; }
  const vault::Vault& vault(const std::string& name) const {
    const auto& v = vaults_.at(vault_index(name));
    return registries_.at(v.chain.value).get(v.id);
  }
  const perps::PerpBook* perp_book(const std::string& vault_name) const {
    const auto& v = vaults_.at(vault_index(vault_name));
    return v.book ? &*v.book : nullptr;
  }

  /// Price from the token's own process or constant, else its numeraire pool.
  Fixed price_of(TokenId t, std::uint64_t h) const {
    if (t == numeraire_) return Fixed::from_int(1);
    if (auto it = anticoin_vault_.find(t.value); it != anticoin_vault_.end()) {
      const auto& vr = vaults_[it->second];
      const auto& v = registries_.at(vr.chain.value).get(vr.id);
      const Fixed p = price_of(vr.rugged, h);
      return p.is_positive() ? vault::anticoin_value(v, p) : Fixed{};
    }
    if (auto it = token_spec_.find(t.value); it != token_spec_.end()) {
      const TokenSpec& ts = sc_.tokens[it->second];
      if (ts.process) return market::price_at_height(*ts.process, h);
      if (ts.price) return *ts.price;
    }
    return pool_price(t).value_or(Fixed{});
  }

  /// Market mark: the numeraire pool price when one is live, else price_of.
  Fixed mark_price(TokenId t) const {
    if (t == numeraire_) return Fixed::from_int(1);
    return pool_price(t).value_or(price_of(t, height_));
  }

  /// Numeraire value of everything the account holds, at mark prices.
  Fixed numeraire_value(AccountId a) const {
    Fixed total;
    for (std::uint32_t t = 1; t <= token_symbols_.size(); ++t) {
      const Fixed b = ledger_.balance(a, TokenId{t});
      if (b.is_positive()) total += b * mark_price(TokenId{t});
    }
    return total;
  }

  void run(std::uint64_t n_blocks) {
    require(n_blocks >= 1, errc::parameter, "block count must be at least 1");
    for (std::uint64_t i = 0; i < n_blocks; ++i) step();
  }

  void run() { run(sc_.blocks); }

  void step() {
    ++height_;
    block_failed_.clear();
    for (const auto& c : sc_.chains) {
      phase_prices(c.id);
      phase_detection(c.id);
      phase_execution(c.id);
      phase_vault_ops(c.id);
      phase_perps(c.id);
      phase_deadlines(c.id);
    }
    phase_bridge();
    const auto tk = phase_tokenomics();
    for (const auto& c : sc_.chains) {
      TelemetryRow row;
      row.chain = c.id;
      row.height = height_;
      row.failed_events = block_failed_[c.id.value];
      if (c.id == sc_.rugsafe_chain) {
        row.emission = tk.emission + tk.rewards;
        row.burned = tk.burned;
        row.current_supply = ledger_.supply(rsf_);
        row.target_supply = tk.target;
        row.reward_minted = tk.rewards;
      }
      telemetry_.push_back(row);
    }
  }

  /// Terminal snapshot; balances and supplies match what the event deltas
  /// replay to.
  json state_snapshot() const {
    json s;
    s["scenario"] = sc_.name;
    s["height"] = height_;
    s["trace_hash"] = trace_hash();
    json tokens = json::array();
    for (std::uint32_t t = 1; t <= token_symbols_.size(); ++t)
      tokens.push_back({{"id", t}, {"symbol", token_symbols_[t - 1]}, {"supply", ledger_.supply(TokenId{t}).str()}});
    s["tokens"] = tokens;
    json accounts = json::array();
    for (const auto& a : ledger_.accounts())
      accounts.push_back({{"id", a.value}, {"name", account_names_.at(a.value)}, {"owner", a.owner.value}});
    s["accounts"] = accounts;
    json balances = json::array();
    for (const auto& [k, v] : ledger_.snapshot())
      balances.push_back({{"a", k.first.value}, {"t", k.second.value}, {"v", v.str()}});
    s["balances"] = balances;
    json pools = json::array();
    for (const auto& p : pools_)
      pools.push_back({{"name", p.spec.name},
                       {"chain", p.spec.chain.value},
                       {"reserve_x", p.state.reserve_x.str()},
                       {"reserve_y", p.state.reserve_y.str()},
                       {"lp_supply", p.state.lp_supply.str()},
                       {"closed", p.state.closed}});
    s["pools"] = pools;
    json vaults = json::array();
    for (const auto& vr : vaults_) {
      const auto& v = registries_.at(vr.chain.value).get(vr.id);
      json jv{{"name", vr.name},
              {"chain", vr.chain.value},
              {"price_at_creation", v.price_at_creation.str()},
              {"total_deposited", v.total_deposited.str()},
              {"total_burned", v.total_burned.str()},
              {"total_withdrawn", v.total_withdrawn.str()},
              {"total_penalties", v.total_penalties.str()},
              {"anticoin_supply", v.anticoin_supply().str()},
              {"receipts", v.receipts.size()}};
      if (vr.book) {
        json ps = json::array();
        for (const auto& p : vr.book->positions())
          ps.push_back({{"id", p.id.value},
                        {"owner", p.owner.value},
                        {"direction", std::string(perps::to_string(p.direction))},
                        {"collateral_ca", p.collateral_ca.str()},
                        {"leverage", p.leverage.str()},
                        {"entry_price", p.entry_price.str()},
                        {"status", std::string(perps::to_string(p.status))}});
        jv["positions"] = ps;
      }
      vaults.push_back(jv);
    }
    s["vaults"] = vaults;
    s["supply"] = {{"initial", supply_.initial_supply.str()},
                   {"current", supply_.current_supply.str()},
                   {"minted_total", supply_.minted_total.str()},
                   {"burned_total", supply_.burned_total.str()}};
    json issuances = json::array();
    for (const auto& i : rugproof_.issuances())
      issuances.push_back({{"id", i.id.value},
                           {"issuer", i.issuer.value},
                           {"bond", i.bond.str()},
                           {"status", std::string(rugproof::to_string(i.status))}});
    json rclaims = json::array();
    for (const auto& c : rugproof_.claims())
      rclaims.push_back({{"id", c.id.value},
                         {"issuance", c.issuance.value},
                         {"claimant", c.claimant.value},
                         {"status", std::string(rugproof::to_string(c.status))}});
    s["rugproof"] = {{"issuances", issuances}, {"claims", rclaims}};
    json policies = json::array();
    for (const auto& p : insurance_.policies())
      policies.push_back({{"id", p.id.value},
                          {"insurer", p.insurer.value},
                          {"insured_value", p.insured_value.str()},
                          {"status", std::string(insurance::to_string(p.status))}});
    json iclaims = json::array();
    for (const auto& c : insurance_.claims())
      iclaims.push_back({{"id", c.id.value},
                         {"policy", c.policy.value},
                         {"level", c.level},
                         {"status", std::string(insurance::to_string(c.status))}});
    s["insurance"] = {{"policies", policies}, {"claims", iclaims}};
    json intents = json::array();
    for (const auto& in : intents_.intents())
      intents.push_back({{"id", in.id.value},
                         {"owner", in.owner.value},
                         {"status", std::string(detection::to_string(in.status))}});
    s["intents"] = intents;
    return s;
  }

  /// Terminal metrics used by parameter sweeps.
  json summary() const {
    json s;
    s["trace_hash"] = trace_hash();
    s["failed_events"] = failed_total_;
    s["final_supply"] = ledger_.supply(rsf_).str();
    for (const auto& vr : vaults_)
      s["penalties:" + vr.name] = registries_.at(vr.chain.value).get(vr.id).total_penalties.str();
    for (const auto& [owner, p] : owner_penalties_) s["penalties_owner:" + owner] = p.str();
    return s;
  }

 private:
  // -------------------------------------------------------------------------
  // Runtime records

  struct PoolRuntime {
    PoolSpec spec;
    market::PoolState state;
    AccountId account{};
  };

  struct VaultRuntime {
    std::string name;
    ChainId chain{};
    VaultId id{};
    TokenId rugged{};
    TokenId anticoin{};
    std::optional<std::size_t> amm_pool;
    std::optional<perps::PerpBook> book;
  };

  struct PendingDrain {
    market::DrainEvent ev;
    std::size_t pool = 0;
    bool executed = false;
    std::set<std::uint32_t> frontrun_planned;
    std::set<std::string> sandwich_planned;
  };

  struct QueuedTx {
    int priority = 0;
    std::uint64_t seq = 0;
    ChainId chain{};
    std::function<void()> run;
  };

  struct BridgeMsg {
    ChainId source{};
    std::uint64_t height = 0;
    vault::RewardEvent reward;
  };

  struct PoolActivity {
    Fixed minted{};
    Fixed creator_outflow{};
    Fixed creator_balance{};
    Fixed volume{};
    Fixed liquidity_start{};
    bool seen = false;
  };

  struct TokenomicsRow {
    Fixed emission{};
    Fixed rewards{};
    Fixed burned{};
    Fixed target{};
  };

  // -------------------------------------------------------------------------
  // Events

  static std::string fx(Fixed v) { return v.str(); }

  void emit(ChainId chain, int phase, const std::string& type, json fields) {
    fields["seq"] = seq_++;
    fields["chain"] = chain.value;
    fields["height"] = height_;
    fields["phase"] = phase;
    fields["type"] = type;
    const auto journal = ledger_.take_journal();
    if (!journal.balances.empty()) {
      json d = json::array();
      for (const auto& x : journal.balances)
        d.push_back({{"a", x.account.value}, {"t", x.token.value}, {"v", x.amount.str()}});
      fields["deltas"] = std::move(d);
    }
    if (!journal.supply.empty()) {
      json d = json::array();
      for (const auto& x : journal.supply) d.push_back({{"t", x.token.value}, {"v", x.amount.str()}});
      fields["supply"] = std::move(d);
    }
    std::string line = fields.dump();
    hasher_.update(line);
    hasher_.update("\n");
    events_.push_back(std::move(line));
  }

  /// Runs `body`; a module error rolls back its ledger changes and is
  /// recorded as a failed event instead of propagating.
  template <class F>
  bool attempt(ChainId chain, int phase, const std::string& type, json fields, F&& body) {
    const auto cp = ledger_.checkpoint();
    std::string code;
    std::string message;
    try {
      body(fields);
      const auto now = ledger_.checkpoint();
      // Bookkeeping passes that found nothing to do stay out of the trace.
      if (fields.value("quiet", false) && now.balances == cp.balances && now.supply == cp.supply) return true;
      fields.erase("quiet");
      emit(chain, phase, type, std::move(fields));
      return true;
    } catch (const error& e) {
      code = std::string(to_string(e.code()));
      message = e.what();
    } catch (const json::exception& e) {
      code = std::string(to_string(errc::parameter));
      message = e.what();
    }
    ledger_.rollback(cp);
    fields["op"] = type;
    fields["error"] = code;
    fields["message"] = message;
    ++block_failed_[chain.value];
    ++failed_total_;
    emit(chain, phase, "failed", std::move(fields));
    return false;
  }

  // -------------------------------------------------------------------------
  // Setup

  TokenId add_token(const std::string& symbol) {
    const TokenId id{static_cast<std::uint32_t>(token_symbols_.size() + 1)};
    token_symbols_.push_back(symbol);
    token_ids_.emplace(symbol, id);
    return id;
  }

  AccountId add_system_account(const std::string& name) {
    const AccountId a = ledger_.open_account();
    account_names_[a.value] = name;
    account_ids_.emplace(name, a);
    return a;
  }

  std::size_t pool_index(const std::string& name) const {
    auto it = pool_by_name_.find(name);
    require(it != pool_by_name_.end(), errc::not_found, "unknown pool " + name);
    return it->second;
  }
  std::size_t vault_index(const std::string& name) const {
    auto it = vault_by_name_.find(name);
    require(it != vault_by_name_.end(), errc::not_found, "unknown vault " + name);
    return it->second;
  }

  PoolHandle handle(std::size_t i) { return {&pools_[i].state, pools_[i].account}; }

  std::optional<Fixed> pool_price(TokenId t) const {
    for (const auto& p : pools_) {
      if (!p.state.has(t) || !p.state.has(numeraire_) || p.state.closed) continue;
      if (!p.state.reserve_x.is_positive() || !p.state.reserve_y.is_positive()) continue;
      return p.state.price_of(t);
    }
    return std::nullopt;
  }

  void genesis() {
    for (const auto& t : sc_.tokens) {
      const TokenId id = add_token(t.symbol);
      token_spec_[id.value] = static_cast<std::size_t>(&t - sc_.tokens.data());
    }
    numeraire_ = token(sc_.numeraire);
    rsf_ = add_token(kRugsafeSymbol);
    for (const auto& v : sc_.vaults) add_token(anticoin_symbol(v.token));

    std::map<std::string, OwnerId> owners;
    for (const auto& a : sc_.accounts) {
      auto [it, fresh] = owners.emplace(a.owner, OwnerId{static_cast<std::uint32_t>(owners.size() + 1)});
      (void)fresh;
      const AccountId id = ledger_.open_account(it->second);
      account_names_[id.value] = a.name;
      account_ids_.emplace(a.name, id);
      owner_names_[it->second.value] = a.owner;
    }
    treasury_ = add_system_account("@treasury");
    rsf_treasury_ = add_system_account("@rsf_treasury");
    genesis_lp_ = add_system_account("@genesis_lp");
    const AccountId rug_escrow = add_system_account("@rugproof_escrow");
    const AccountId ins_escrow = add_system_account("@insurance_escrow");
    rugproof_ = rugproof::RugproofBook(rug_escrow, treasury_, sc_.rugproof);
    insurance_ = insurance::InsuranceBook(ins_escrow, sc_.insurance);

    json fields;
    fields["scenario"] = sc_.name;
    fields["seed"] = sc_.seed;
    fields["rsf_token"] = rsf_.value;
    fields["numeraire"] = numeraire_.value;

    for (const auto& a : sc_.accounts)
      for (const auto& [sym, amt] : a.balances) ledger_.mint(account(a.name), token(sym), amt);

    for (const auto& ps : sc_.pools) {
      PoolRuntime pr;
      pr.spec = ps;
      pr.account = add_system_account("@pool:" + ps.name);
      pr.state = market::make_pool(PoolId{static_cast<std::uint32_t>(pools_.size() + 1)}, token(ps.x), token(ps.y),
                                   ps.fee_bps);
      if (ps.reserve_x.is_positive()) {
        ledger_.mint(pr.account, pr.state.token_x, ps.reserve_x);
        ledger_.mint(pr.account, pr.state.token_y, ps.reserve_y);
        market::pool_add_liquidity(pr.state, genesis_lp_, ps.reserve_x, ps.reserve_y);
      }
      pool_by_name_[ps.name] = pools_.size();
      pools_.push_back(std::move(pr));
    }

    for (const auto& c : sc_.chains) registries_.emplace(c.id.value, vault::VaultRegistry(c.id));
    for (const auto& vs : sc_.vaults) {
      VaultRuntime vr;
      vr.name = vs.name;
      vr.chain = vs.chain;
      vr.id = VaultId{static_cast<std::uint32_t>(vaults_.size() + 1)};
      vr.rugged = token(vs.token);
      vr.anticoin = TokenId{rsf_.value + 1 + static_cast<std::uint32_t>(vaults_.size())};
      if (vs.amm_pool) vr.amm_pool = pool_index(*vs.amm_pool);
      const AccountId custody = add_system_account("@custody:" + vs.name);
      const Fixed price = price_of(vr.rugged, 0);
      if (!price.is_positive()) fail(errc::load, "load error at /vaults: no positive price for token " + vs.token);
      registries_.at(vs.chain.value)
          .create_vault({vr.id, vr.rugged, vr.anticoin, custody, treasury_, vs.params, price});
      if (vr.amm_pool || std::any_of(sc_.agents.begin(), sc_.agents.end(), [&](const AgentSpec& a) {
            return std::any_of(a.script.begin(), a.script.end(), [&](const ScriptOp& op) {
              return op.op == "open_position" && op.args.value("vault", "") == vs.name;
            });
          })) {
        const AccountId escrow = add_system_account("@perps_escrow:" + vs.name);
        vr.book.emplace(vr.id, vr.anticoin, escrow, treasury_, sc_.perps.config);
      }
      anticoin_vault_[vr.anticoin.value] = vaults_.size();
      vault_by_name_[vs.name] = vaults_.size();
      vaults_.push_back(std::move(vr));
    }

    ledger_.mint(rsf_treasury_, rsf_, sc_.initial_supply);
    supply_.initial_supply = sc_.initial_supply;
    supply_.current_supply = sc_.initial_supply;

    json accounts = json::array();
    for (const auto& a : ledger_.accounts())
      accounts.push_back({{"id", a.value}, {"name", account_names_.at(a.value)}, {"owner", a.owner.value}});
    fields["accounts"] = accounts;
    json tokens = json::array();
    for (std::uint32_t t = 1; t <= token_symbols_.size(); ++t)
      tokens.push_back({{"id", t}, {"symbol", token_symbols_[t - 1]}});
    fields["tokens"] = tokens;
    fields["initial_supply"] = fx(sc_.initial_supply);
    emit(sc_.rugsafe_chain, kGenesis, "genesis", std::move(fields));

    for (const auto& a : sc_.agents) {
      rngs_.emplace(a.name, Rng(sc_.seed, "agent:" + a.name));
      for (const auto& p : a.monitor_pools)
        if (!monitors_.contains(pool_index(p)))
          monitors_.emplace(pool_index(p), detection::PoolMonitor(pools_[pool_index(p)].state.id, sc_.monitor));
    }
  }

  // -------------------------------------------------------------------------
  // Script helpers

  static Fixed arg_fixed(const json& args, const char* key) {
    const json& v = args.at(key);
    if (v.is_string()) return Fixed::parse(v.get<std::string>());
    if (v.is_number()) return Fixed::parse(v.dump());
    fail(errc::parameter, std::string("argument ") + key + " is not numeric");
  }

  /// Amount argument that also accepts "all" (the given full balance).
  static Fixed arg_amount(const json& args, const char* key, Fixed all) {
    const json& v = args.at(key);
    if (v.is_string() && v.get<std::string>() == "all") return all;
    return arg_fixed(args, key);
  }

  template <class F>
  void for_ops(ChainId chain, const std::set<std::string>& ops, F&& f) {
    for (const auto& a : sc_.agents) {
      if (a.chain != chain) continue;
      for (const auto& op : a.script)
        if (op.at == height_ && ops.contains(op.op)) f(a, op);
    }
  }

  void enqueue(std::uint64_t at_height, ChainId chain, int priority, std::function<void()> run) {
    queue_[at_height].push_back({priority, qseq_++, chain, std::move(run)});
  }

  // -------------------------------------------------------------------------
  // Phase 1: prices

  void phase_prices(ChainId chain) {
    for (auto& [idx, act] : activity_) {
      if (pools_[idx].spec.chain != chain || act.seen) continue;
      act.liquidity_start = pools_[idx].state.liquidity();
      act.seen = true;
    }
  }

  // -------------------------------------------------------------------------
  // Phase 2: mempool submissions, monitoring, plans and intents

  void phase_detection(ChainId chain) {
    for_ops(chain, {"drain"}, [&](const AgentSpec& a, const ScriptOp& op) { submit_drain(chain, a, op); });

    for (auto& [idx, mon] : monitors_) {
      auto& p = pools_[idx];
      if (p.spec.chain != chain) continue;
      if (auto sig = mon.observe(height_, p.state.liquidity())) emit_signal(chain, p.spec.name, *sig);
      auto it = activity_.find(idx);
      if (height_ > 1) {
        detection::BlockActivity ba;
        ba.height = height_ - 1;
        if (it != activity_.end()) {
          ba.minted = it->second.minted;
          ba.creator_outflow = it->second.creator_outflow;
          ba.creator_balance = it->second.creator_balance;
          ba.volume = it->second.volume;
          ba.delta_liquidity = p.state.liquidity() - it->second.liquidity_start;
        }
        for (const auto& sig : mon.scan_aux(ba)) emit_signal(chain, p.spec.name, sig);
      }
      activity_[idx] = PoolActivity{};
      activity_[idx].liquidity_start = p.state.liquidity();
      activity_[idx].seen = true;
    }

    for (auto& d : drains_) {
      if (d.executed || pools_[d.pool].spec.chain != chain || height_ >= d.ev.executes_at.height) continue;
      for (const auto& a : sc_.agents) {
        if (a.kind != AgentKind::Detector) continue;
        if (std::find(a.monitor_pools.begin(), a.monitor_pools.end(), pools_[d.pool].spec.name) ==
            a.monitor_pools.end())
          continue;
        if (a.frontrun) plan_frontruns(chain, a, d);
        if (a.sandwich_budget.is_positive() && !d.sandwich_planned.contains(a.name)) {
          d.sandwich_planned.insert(a.name);
          plan_sandwich(chain, a, d);
        }
      }
    }

    run_solvers(chain);
  }

  void emit_signal(ChainId chain, const std::string& pool, const detection::RiskSignal& s) {
    emit(chain, kDetection, "risk_signal",
         {{"pool", pool}, {"kind", std::string(detection::to_string(s.kind))}, {"magnitude", fx(s.magnitude)},
          {"observed_height", s.height}});
  }

  void submit_drain(ChainId chain, const AgentSpec& a, const ScriptOp& op) {
    attempt(chain, kDetection, "drain_submitted", {{"agent", a.name}}, [&](json& ev) {
      const std::size_t pi = pool_index(op.args.at("pool").get<std::string>());
      auto& p = pools_[pi];
      const AccountId creator = account(a.account);
      // The rugged side is whichever pool token is not the numeraire.
      const TokenId rug = p.state.token_x == numeraire_ ? p.state.token_y : p.state.token_x;
      const Fixed bal = ledger_.balance(creator, rug);
      const Fixed amount = op.args.contains("amount") ? arg_amount(op.args, "amount", bal) : bal;
      require(amount.is_positive() && amount <= bal, errc::balance, "creator cannot fund the drain");
      const std::uint64_t window = op.args.value("window", std::uint64_t{1});
      require(window >= 1, errc::parameter, "drain window must be at least one block");
      PendingDrain d;
      d.pool = pi;
      d.ev.pool = p.state.id;
      d.ev.creator = creator;
      d.ev.rug_token = rug;
      d.ev.t_rug = amount;
      // Circulating supply: tokens held outside this pool.
      d.ev.t_total = ledger_.supply(rug) - p.state.reserve_of(rug);
      d.ev.submitted_at = {chain, height_};
      d.ev.executes_at = {chain, height_ + window};
      d.ev.priority = op.args.value("priority", 0);
      ev["pool"] = p.spec.name;
      ev["t_rug"] = fx(amount);
      ev["t_total"] = fx(d.ev.t_total);
      ev["executes_at"] = d.ev.executes_at.height;
      ev["priority"] = d.ev.priority;
      const std::size_t di = drains_.size();
      drains_.push_back(std::move(d));
      enqueue(height_ + window, chain, drains_[di].ev.priority, [this, di, chain] { execute_drain(chain, di); });
    });
  }

  void plan_frontruns(ChainId chain, const AgentSpec& detector, PendingDrain& d) {
    for (const auto& name : detector.protect) {
      const AccountId holder = account(name);
      if (d.frontrun_planned.contains(holder.value)) continue;
      d.frontrun_planned.insert(holder.value);
      const Fixed holdings = ledger_.balance(holder, d.ev.rug_token);
      detection::TxPlan plan;
      try {
        plan = detection::plan_frontrun(d.ev, pools_[d.pool].state, holder, holdings, height_, sc_.protocol_priority);
      } catch (const error&) {
        continue;
      }
      if (plan.empty()) continue;
      emit(chain, kDetection, "plan_frontrun",
           {{"detector", detector.name}, {"holder", name}, {"amount_in", fx(plan.legs[0].amount_in)},
            {"expected_out", fx(plan.expected_profit)}, {"priority", plan.legs[0].priority}});
      schedule_leg(chain, height_, plan.legs[0]);
    }
  }

  void plan_sandwich(ChainId chain, const AgentSpec& detector, PendingDrain& d) {
    const AccountId actor = account(detector.account);
    const Fixed budget = min(detector.sandwich_budget, ledger_.balance(actor, d.ev.rug_token));
    std::optional<detection::TxPlan> plan;
    try {
      plan = detection::plan_sandwich(d.ev, pools_[d.pool].state, actor, budget, height_, sc_.protocol_priority);
    } catch (const error&) {
      return;
    }
    if (!plan) {
      emit(chain, kDetection, "plan_sandwich_withheld", {{"detector", detector.name}, {"budget", fx(budget)}});
      return;
    }
    emit(chain, kDetection, "plan_sandwich",
         {{"detector", detector.name}, {"budget", fx(budget)}, {"expected_profit", fx(plan->expected_profit)},
          {"post_cost", fx(plan->legs[1].amount_in)}});
    schedule_leg(chain, height_, plan->legs[0]);
    schedule_leg(chain, d.ev.executes_at.height, plan->legs[1]);
  }

  void schedule_leg(ChainId chain, std::uint64_t at, const detection::TxLeg& leg) {
    enqueue(at, chain, leg.priority, [this, chain, leg] {
      const std::size_t pi = pool_by_id(leg.pool);
      attempt(chain, kExecution, std::string(detection::to_string(leg.kind)),
              {{"actor", account_names_.at(leg.actor.value)}, {"pool", pools_[pi].spec.name}}, [&](json& ev) {
                const Fixed amount = min(leg.amount_in, ledger_.balance(leg.actor, leg.input));
                require(amount.is_positive(), errc::balance, "nothing left to trade");
                const auto q = ledger_swap(ledger_, handle(pi), leg.actor, leg.input, amount);
                note_volume(pi, amount);
                ev["amount_in"] = fx(amount);
                ev["amount_out"] = fx(q.amount_out);
                ev["planned_out"] = fx(leg.expected_out);
                if (leg.kind == detection::LegKind::BackrunBuy) salvage_[leg.actor.value] += q.amount_out;
              });
    });
  }

  std::size_t pool_by_id(PoolId id) const { return id.value - 1; }

  void run_solvers(ChainId chain) {
    std::vector<detection::SolverBid> bids;
    for (const auto& a : sc_.agents)
      if (a.kind == AgentKind::Solver) bids.push_back({account(a.account), a.fee_bps});
    if (bids.empty()) return;
    const auto view = [&](const detection::Intent& in) {
      const auto& p = pools_[pool_by_id(in.pool)];
      if (p.spec.chain != chain) return detection::MarketView{in.p0 + in.p0, in.l0 + in.l0};  // never triggers
      return detection::MarketView{price_of(in.token, height_), p.state.liquidity()};
    };
    for (const auto& fill : intents_.solver_step(view, bids)) {
      const auto& in = intents_.intent(fill.intent);
      emit(chain, kDetection, "intent_triggered",
           {{"intent", in.id.value}, {"solver", account_names_.at(fill.solver.value)}, {"fee_bps", fill.fee_bps},
            {"by_price", fill.trigger.price}, {"by_liquidity", fill.trigger.liquidity}});
      enqueue(height_, chain, sc_.protocol_priority,
              [this, chain, id = in.id, solver = fill.solver, fee = fill.fee_bps] { execute_intent(chain, id, solver, fee); });
    }
  }

  void execute_intent(ChainId chain, IntentId id, AccountId solver, int fee_bps) {
    const auto& in = intents_.intent(id);
    const bool ok = attempt(chain, kExecution, "intent_executed",
                            {{"intent", id.value}, {"action", std::string(detection::to_string(in.action))}},
                            [&](json& ev) {
                              if (in.action == detection::IntentAction::ExitToNumeraire) {
                                const std::size_t pi = pool_by_id(in.pool);
                                const auto r = detection::execute_exit(ledger_, handle(pi), in, solver, fee_bps);
                                note_volume(pi, r.sold);
                                ev["sold"] = fx(r.sold);
                                ev["proceeds"] = fx(r.proceeds);
                                ev["solver_fee"] = fx(r.solver_fee);
                              } else {
                                const auto& vr = vaults_[in.vault.value - 1];
                                const Fixed amount = ledger_.balance(in.owner, in.token);
                                auto res = registries_.at(vr.chain.value).deposit(ledger_, vr.id, in.owner, amount);
                                const Fixed fee = scale(res.minted, fee_bps, 10'000, rounding::floor);
                                ledger_.transfer(in.owner, solver, vr.anticoin, fee);
                                queue_reward(vr.chain, res.reward);
                                ev["deposited"] = fx(amount);
                                ev["solver_fee"] = fx(fee);
                              }
                            });
    if (!ok) intents_.mark_failed(id);
  }

  // -------------------------------------------------------------------------
  // Phase 3: ordered execution

  void phase_execution(ChainId chain) {
    for_ops(chain, {"swap", "add_liquidity", "remove_liquidity", "mint", "transfer"},
            [&](const AgentSpec& a, const ScriptOp& op) {
              enqueue(height_, chain, 0, [this, chain, &a, &op] { run_market_op(chain, a, op); });
            });
    for (const auto& a : sc_.agents) {
      if (a.chain != chain) continue;
      if (a.noise) enqueue(height_, chain, 0, [this, chain, &a] { noise_trade(chain, a); });
      if (a.kind == AgentKind::PegKeeper) enqueue(height_, chain, 0, [this, chain, &a] { peg_keep(chain, a); });
    }
    auto it = queue_.find(height_);
    if (it == queue_.end()) return;
    // Pull this chain's transactions and run them best-first; legs added
    // while running (back-runs) join the same ordering.
    for (;;) {
      auto& q = queue_[height_];
      auto best = q.end();
      for (auto i = q.begin(); i != q.end(); ++i) {
        if (i->chain != chain) continue;
        if (best == q.end() || i->priority > best->priority || (i->priority == best->priority && i->seq < best->seq))
          best = i;
      }
      if (best == q.end()) break;
      auto run = std::move(best->run);
      q.erase(best);
      run();
    }
    if (queue_[height_].empty()) queue_.erase(height_);
  }

  void note_volume(std::size_t pool, Fixed amount) {
    auto& act = activity_[pool];
    act.volume += amount;
  }

  void run_market_op(ChainId chain, const AgentSpec& a, const ScriptOp& op) {
    const AccountId me = account(a.account);
    attempt(chain, kExecution, op.op, {{"agent", a.name}}, [&](json& ev) {
      if (op.op == "swap") {
        const std::size_t pi = pool_index(op.args.at("pool").get<std::string>());
        const TokenId in = token(op.args.at("token").get<std::string>());
        const Fixed amount = arg_amount(op.args, "amount", ledger_.balance(me, in));
        const Fixed before = ledger_.balance(me, in);
        const auto q = ledger_swap(ledger_, handle(pi), me, in, amount);
        note_volume(pi, amount);
        if (a.kind == AgentKind::Creator && in != numeraire_) {
          activity_[pi].creator_outflow += amount;
          activity_[pi].creator_balance += before;
        }
        ev["pool"] = pools_[pi].spec.name;
        ev["amount_in"] = fx(amount);
        ev["amount_out"] = fx(q.amount_out);
      } else if (op.op == "add_liquidity") {
        const std::size_t pi = pool_index(op.args.at("pool").get<std::string>());
        const auto c = ledger_add_liquidity(ledger_, handle(pi), me, arg_fixed(op.args, "amount_x"),
                                            arg_fixed(op.args, "amount_y"));
        ev["pool"] = pools_[pi].spec.name;
        ev["shares"] = fx(c.shares);
      } else if (op.op == "remove_liquidity") {
        const std::size_t pi = pool_index(op.args.at("pool").get<std::string>());
        const auto c = ledger_remove_liquidity(ledger_, handle(pi), me, arg_fixed(op.args, "share"));
        ev["pool"] = pools_[pi].spec.name;
        ev["amount_x"] = fx(c.amount_x);
        ev["amount_y"] = fx(c.amount_y);
      } else if (op.op == "mint") {
        const TokenId t = token(op.args.at("token").get<std::string>());
        require(t != rsf_ && !anticoin_vault_.contains(t.value), errc::parameter, "protocol tokens cannot be minted");
        const Fixed amount = arg_fixed(op.args, "amount");
        require(amount.is_positive(), errc::parameter, "mint amount must be positive");
        ledger_.mint(me, t, amount);
        for (std::size_t i = 0; i < pools_.size(); ++i)
          if (pools_[i].state.has(t)) activity_[i].minted += amount;
        ev["token"] = symbol(t);
        ev["amount"] = fx(amount);
      } else if (op.op == "transfer") {
        const TokenId t = token(op.args.at("token").get<std::string>());
        const Fixed amount = arg_amount(op.args, "amount", ledger_.balance(me, t));
        ledger_.transfer(me, account(op.args.at("to").get<std::string>()), t, amount);
        ev["token"] = symbol(t);
        ev["amount"] = fx(amount);
      }
    });
  }

  void noise_trade(ChainId chain, const AgentSpec& a) {
    Rng& rng = rngs_.at(a.name);
    if (!rng.chance(a.noise->probability)) return;
    const std::size_t pi = pool_index(a.noise->pool);
    const auto& st = pools_[pi].state;
    const TokenId in = rng.below(2) == 0 ? st.token_x : st.token_y;
    const AccountId me = account(a.account);
    const Fixed amount = min(rng.uniform(Fixed::quantum(), a.noise->max_amount), ledger_.balance(me, in));
    if (!market::try_quote(st, in, amount)) return;
    attempt(chain, kExecution, "noise_swap", {{"agent", a.name}, {"pool", a.noise->pool}}, [&](json& ev) {
      const auto q = ledger_swap(ledger_, handle(pi), me, in, amount);
      note_volume(pi, amount);
      ev["token"] = symbol(in);
      ev["amount_in"] = fx(amount);
      ev["amount_out"] = fx(q.amount_out);
    });
  }

  void peg_keep(ChainId chain, const AgentSpec& a) {
    const std::size_t pi = pool_index(a.peg_pool);
    const auto& vr = vaults_[vault_index(a.peg_vault)];
    const auto& st = pools_[pi].state;
    const Fixed rug_price = price_of(vr.rugged, height_);
    if (!rug_price.is_positive()) return;
    const Fixed peg = vault::anticoin_value(registries_.at(vr.chain.value).get(vr.id), rug_price);
    if (!peg.is_positive() || st.closed || !st.reserve_x.is_positive()) return;
    const AccountId me = account(a.account);
    const bool sell = st.price_of(vr.anticoin) > peg;
    const TokenId input = sell ? vr.anticoin : st.other(vr.anticoin);
    const Fixed budget = min(a.peg_budget, ledger_.balance(me, input));
    const auto trade = market::plan_peg_trade(st, vr.anticoin, peg, budget, sc_.peg_keeper);
    if (!trade) return;
    attempt(chain, kExecution, "peg_trade", {{"agent", a.name}, {"pool", a.peg_pool}}, [&](json& ev) {
      const auto q = ledger_swap(ledger_, handle(pi), me, trade->input, trade->amount_in);
      note_volume(pi, trade->amount_in);
      ev["peg"] = fx(peg);
      ev["input"] = symbol(trade->input);
      ev["amount_in"] = fx(trade->amount_in);
      ev["amount_out"] = fx(q.amount_out);
      ev["spot_before"] = fx(trade->spot_before);
      ev["spot_after"] = fx(trade->spot_after);
    });
  }

  void execute_drain(ChainId chain, std::size_t di) {
    auto& d = drains_[di];
    const std::size_t pi = d.pool;
    attempt(chain, kExecution, "drain_executed", {{"pool", pools_[pi].spec.name}}, [&](json& ev) {
      auto& st = pools_[pi].state;
      require(height_ >= d.ev.executes_at.height, errc::early, "drain window has not elapsed");
      const Fixed balance = ledger_.balance(d.ev.creator, d.ev.rug_token);
      require(balance >= d.ev.t_rug, errc::balance, "creator holds less than T_rug");
      market::DrainOutcome out;
      out.naive_target = market::naive_drain_target(d.ev.t_rug, d.ev.t_total, st.reserve_of(st.other(d.ev.rug_token)));
      out.spot_before = st.price_of(d.ev.rug_token);
      out.liquid_out = ledger_swap(ledger_, handle(pi), d.ev.creator, d.ev.rug_token, d.ev.t_rug).amount_out;
      out.spot_after = max(st.price_of(d.ev.rug_token), Fixed::quantum());
      note_volume(pi, d.ev.t_rug);
      activity_[pi].creator_outflow += d.ev.t_rug;
      activity_[pi].creator_balance += balance;
      d.executed = true;
      ev["t_rug"] = fx(d.ev.t_rug);
      ev["naive_target"] = fx(out.naive_target);
      ev["liquid_out"] = fx(out.liquid_out);
      ev["spot_before"] = fx(out.spot_before);
      ev["spot_after"] = fx(out.spot_after);
      last_drain_ = out;
    });
    if (!d.executed) return;
    for (const auto& a : sc_.agents) {
      if (a.kind != AgentKind::Detector || !a.backrun_budget.is_positive()) continue;
      if (std::find(a.monitor_pools.begin(), a.monitor_pools.end(), pools_[pi].spec.name) == a.monitor_pools.end())
        continue;
      const AccountId actor = account(a.account);
      const TokenId liquid = pools_[pi].state.other(d.ev.rug_token);
      const Fixed budget = min(a.backrun_budget, ledger_.balance(actor, liquid));
      const auto plan = detection::plan_backrun(last_drain_, pools_[pi].state, d.ev.rug_token, actor, budget,
                                                a.backrun_cap);
      if (plan.empty()) continue;
      emit(chain, kExecution, "plan_backrun",
           {{"detector", a.name}, {"spend", fx(plan.legs[0].amount_in)}, {"expected_out", fx(plan.legs[0].expected_out)},
            {"nominal_size", fx(plan.nominal_size)}});
      detection::TxLeg leg = plan.legs[0];
      leg.priority = d.ev.priority - 1;
      schedule_leg(chain, height_, leg);
    }
  }

  // -------------------------------------------------------------------------
  // Phase 4: vault and case operations from scripts

  void phase_vault_ops(ChainId chain) {
    for (const auto& a : sc_.agents) {
      if (a.chain != chain) continue;
      for (const auto& op : a.script)
        if (op.at == height_ && phase_of(op.op) == kVaultOps) run_vault_op(chain, a, op);
      if (a.kind == AgentKind::Detector && a.deposit_salvage) deposit_salvage(chain, a);
    }
  }

  static int phase_of(const std::string& op) {
    static const std::set<std::string> execution{"drain", "swap", "add_liquidity", "remove_liquidity", "mint",
                                                 "transfer"};
    return execution.contains(op) ? kExecution : kVaultOps;
  }

  void deposit_salvage(ChainId chain, const AgentSpec& a) {
    const AccountId me = account(a.account);
    auto it = salvage_.find(me.value);
    if (it == salvage_.end() || !it->second.is_positive()) return;
    salvage_.erase(it);
    for (std::size_t i = 0; i < vaults_.size(); ++i) {
      const auto& vr = vaults_[i];
      if (vr.chain != chain) continue;
      const Fixed amount = ledger_.balance(me, vr.rugged);
      if (!amount.is_positive()) continue;
      attempt(chain, kVaultOps, "salvage_deposit", {{"agent", a.name}, {"vault", vr.name}}, [&](json& ev) {
        auto res = registries_.at(chain.value).deposit(ledger_, vr.id, me, amount);
        queue_reward(chain, res.reward);
        ev["amount"] = fx(amount);
        ev["minted"] = fx(res.minted);
      });
    }
  }

  void queue_reward(ChainId source, const vault::RewardEvent& r) {
    if (r.reward.is_positive()) bridge_.push_back({source, height_, r});
  }

  VaultRuntime& vault_arg(const json& args) { return vaults_[vault_index(args.at("vault").get<std::string>())]; }

  static dispute::Side side_arg(const json& args, const char* for_word, const char* against_word) {
    const std::string s = args.at("side").get<std::string>();
    if (s == for_word || s == "for") return dispute::Side::For;
    if (s == against_word || s == "against") return dispute::Side::Against;
    fail(errc::parameter, "unknown side '" + s + "'");
  }

  CaseId latest_claim(PolicyId policy) const {
    const auto& cs = insurance_.claims();
    for (auto it = cs.rbegin(); it != cs.rend(); ++it)
      if (it->policy == policy) return it->id;
    fail(errc::not_found, "no claim on policy " + std::to_string(policy.value));
  }

  IssuanceId issuance_for(TokenId t) const {
    const auto& is = rugproof_.issuances();
    for (auto it = is.rbegin(); it != is.rend(); ++it)
      if (it->token == t) return it->id;
    fail(errc::not_found, "no bonded issuance for token");
  }

  CaseId open_rug_claim(IssuanceId id) const {
    for (const auto& c : rugproof_.claims())
      if (c.issuance == id && c.status == rugproof::ClaimStatus::Voting) return c.id;
    fail(errc::not_found, "no open rug claim");
  }

  static json payouts_json(const std::vector<dispute::Payout>& ps) {
    json out = json::array();
    for (const auto& p : ps) out.push_back({{"to", p.to.value}, {"amount", p.amount.str()}, {"reason", p.reason}});
    return out;
  }

  void run_vault_op(ChainId chain, const AgentSpec& a, const ScriptOp& op) {
    const AccountId me = account(a.account);
    attempt(chain, kVaultOps, op.op, {{"agent", a.name}}, [&](json& ev) {
      const json& args = op.args;
      if (op.op == "deposit" || op.op == "burn" || op.op == "withdraw") {
        auto& vr = vault_arg(args);
        require(vr.chain == chain, errc::parameter, "vault is on another chain");
        auto& reg = registries_.at(chain.value);
        ev["vault"] = vr.name;
        if (op.op == "deposit") {
          const Fixed amount = arg_amount(args, "amount", ledger_.balance(me, vr.rugged));
          auto res = reg.deposit(ledger_, vr.id, me, amount);
          queue_reward(chain, res.reward);
          ev["amount"] = fx(amount);
          ev["reward"] = fx(res.reward.reward);
          if (res.receipt.nft_serial) ev["serial"] = *res.receipt.nft_serial;
        } else if (op.op == "burn") {
          const Fixed amount = arg_amount(args, "amount", ledger_.balance(me, vr.anticoin));
          auto res = reg.burn_anticoins(ledger_, vr.id, me, amount);
          queue_reward(chain, res.reward);
          ev["amount"] = fx(amount);
          ev["reward"] = fx(res.reward.reward);
        } else {
          const Fixed amount = arg_amount(args, "amount", ledger_.balance(me, vr.anticoin));
          auto res = reg.withdraw(ledger_, vr.id, me, amount);
          owner_penalties_[owner_names_.at(me.owner.value)] += res.penalty;
          ev["amount"] = fx(amount);
          ev["returned"] = fx(res.returned);
          ev["penalty"] = fx(res.penalty);
          ev["rate"] = fx(res.quote.rate);
          ev["prior_withdrawals"] = res.quote.prior_withdrawals;
        }
      } else if (op.op == "intent") {
        detection::Intent in;
        in.owner = me;
        const std::size_t pi = pool_index(args.at("pool").get<std::string>());
        in.pool = pools_[pi].state.id;
        in.token = token(args.at("token").get<std::string>());
        require(pools_[pi].state.has(in.token), errc::parameter, "intent token not in pool");
        in.theta_price = arg_fixed(args, "theta_price");
        in.theta_liquidity = arg_fixed(args, "theta_liquidity");
        const std::string action = args.value("action", std::string("exit"));
        if (action == "exit" || action == "exit_to_numeraire") {
          in.action = detection::IntentAction::ExitToNumeraire;
        } else if (action == "swap_to_anticoin") {
          in.action = detection::IntentAction::SwapToAnticoin;
          in.vault = vault_arg(args).id;
        } else {
          fail(errc::parameter, "unknown intent action '" + action + "'");
        }
        in.solver_fee_bps = args.value("max_fee_bps", 100);
        in.p0 = price_of(in.token, height_);
        in.l0 = pools_[pi].state.liquidity();
        ev["intent"] = intents_.register_intent(in).value;
      } else if (op.op == "open_position") {
        auto& vr = vault_arg(args);
        require(vr.book.has_value(), errc::parameter, "vault has no perpetuals book");
        const Fixed mark = price_of(vr.rugged, height_);
        const Fixed unit = vault::anticoin_value(registries_.at(vr.chain.value).get(vr.id), mark);
        const std::string dir = args.at("direction").get<std::string>();
        require(dir == "long" || dir == "short", errc::parameter, "direction must be long or short");
        const auto& p = vr.book->open_position(ledger_, me, arg_fixed(args, "collateral"), arg_fixed(args, "leverage"),
                                               dir == "long" ? perps::Direction::Long : perps::Direction::Short, mark,
                                               unit, height_);
        ev["vault"] = vr.name;
        ev["position"] = p.id.value;
        ev["entry_price"] = fx(mark);
        ev["unit_value"] = fx(unit);
      } else if (op.op == "close_position") {
        auto& vr = vault_arg(args);
        require(vr.book.has_value(), errc::parameter, "vault has no perpetuals book");
        const auto index = args.value("index", std::size_t{0});
        std::size_t seen = 0;
        std::optional<PositionId> id;
        for (const auto& p : vr.book->positions())
          if (p.owner == me && seen++ == index) id = p.id;
        require(id.has_value(), errc::not_found, "no such position");
        const auto r = vr.book->close_position(ledger_, *id, me, price_of(vr.rugged, height_));
        ev["vault"] = vr.name;
        ev["position"] = id->value;
        ev["returned"] = fx(r.returned);
        ev["pnl_ca"] = fx(r.pnl_ca);
      } else if (op.op == "issue_bonded") {
        const auto& iss = rugproof_.issue_bonded_token(ledger_, me, token(args.at("token").get<std::string>()),
                                                       arg_fixed(args, "total"), arg_fixed(args, "fraction"));
        ev["issuance"] = iss.id.value;
        ev["bond"] = fx(iss.bond);
      } else if (op.op == "rug_claim") {
        const auto& c = rugproof_.submit_rug_claim(ledger_, me, issuance_for(token(args.at("token").get<std::string>())),
                                                   arg_fixed(args, "fraction"), height_);
        ev["claim"] = c.id.value;
        ev["claim_bond"] = fx(c.claim_bond);
        ev["challenge_end"] = c.challenge_end;
      } else if (op.op == "vote_rug") {
        const CaseId id = open_rug_claim(issuance_for(token(args.at("token").get<std::string>())));
        const auto side = side_arg(args, "rugging", "not_rugging");
        rugproof_.cast_vote(ledger_, id, me, arg_fixed(args, "deposit"), side, height_);
        ev["claim"] = id.value;
        ev["side"] = std::string(dispute::to_string(side));
      } else if (op.op == "issue_policy") {
        const Fixed duration = arg_fixed(args, "duration");
        require(duration.is_positive(), errc::parameter, "policy duration must be positive");
        const auto& p = insurance_.issue_policy(ledger_, me, account(args.at("insured").get<std::string>()),
                                                token(args.at("token").get<std::string>()), arg_fixed(args, "value"),
                                                arg_fixed(args, "fraction"),
                                                static_cast<std::uint64_t>(duration.raw() / Fixed::kScale), height_);
        ev["policy"] = p.id.value;
        ev["insurer_bond"] = fx(p.insurer_bond);
      } else if (op.op == "claim_insurance") {
        const PolicyId pid{static_cast<std::uint32_t>(args.at("policy").get<std::uint64_t>())};
        std::optional<Fixed> loss;
        if (args.contains("loss")) loss = arg_fixed(args, "loss");
        const auto& c = insurance_.submit_claim(ledger_, pid, me, arg_fixed(args, "fraction"), height_, loss);
        ev["claim"] = c.id.value;
        ev["claim_bond"] = fx(c.claim_bond);
      } else if (op.op == "join_claim") {
        const CaseId id = latest_claim(PolicyId{static_cast<std::uint32_t>(args.at("policy").get<std::uint64_t>())});
        insurance_.join_claim(ledger_, id, me, arg_fixed(args, "loss"), arg_fixed(args, "fraction"), height_);
        ev["claim"] = id.value;
      } else if (op.op == "dispute_claim") {
        const CaseId id = latest_claim(PolicyId{static_cast<std::uint32_t>(args.at("policy").get<std::uint64_t>())});
        insurance_.dispute_claim(ledger_, id, me, arg_fixed(args, "fraction"), height_);
        ev["claim"] = id.value;
      } else if (op.op == "vote_claim") {
        const CaseId id = latest_claim(PolicyId{static_cast<std::uint32_t>(args.at("policy").get<std::uint64_t>())});
        const auto side = side_arg(args, "approve", "reject");
        insurance_.cast_vote(ledger_, id, me, arg_fixed(args, "deposit"), side, height_);
        ev["claim"] = id.value;
        ev["side"] = std::string(dispute::to_string(side));
      } else if (op.op == "escalate") {
        const CaseId id = latest_claim(PolicyId{static_cast<std::uint32_t>(args.at("policy").get<std::uint64_t>())});
        std::vector<dispute::Payout> log;
        const Fixed bond = insurance_.escalate(ledger_, id, me, height_, log);
        ev["claim"] = id.value;
        ev["bond"] = fx(bond);
        ev["level"] = insurance_.claim(id).level;
        ev["payouts"] = payouts_json(log);
      } else {
        fail(errc::parameter, "op '" + op.op + "' is not valid in this phase");
      }
    });
  }

  // -------------------------------------------------------------------------
  // Phase 5: perpetuals

  void phase_perps(ChainId chain) {
    for (auto& vr : vaults_) {
      if (vr.chain != chain || !vr.book) continue;
      auto& book = *vr.book;
      const bool any_active =
          std::any_of(book.positions().begin(), book.positions().end(), [](const auto& p) { return p.active(); });
      if (!any_active) continue;
      const Fixed mark = price_of(vr.rugged, height_);
      if (height_ % sc_.perps.funding.interval_blocks == 0) {
        attempt(chain, kPerps, "funding", {{"vault", vr.name}}, [&](json& ev) {
          require(vr.amm_pool.has_value(), errc::illiquid, "vault has no protocol pool for funding depth");
          const Fixed l_pool = pools_[*vr.amm_pool].state.reserve_of(numeraire_);
          const auto r = book.apply_funding(ledger_, sc_.perps.funding, l_pool, height_);
          ev["n_long"] = r.n_long;
          ev["n_short"] = r.n_short;
          ev["rate"] = fx(r.rate);
          ev["total_paid"] = fx(r.total_paid);
          ev["treasury_remainder"] = fx(r.treasury_remainder);
        });
      }
      if (mark.is_zero()) continue;
      std::vector<perps::LiquidatorBid> bids;
      for (const auto& p : book.positions()) {
        if (p.status != perps::Status::Flagged) continue;
        for (const auto& a : sc_.agents)
          if (a.kind == AgentKind::Liquidator && a.chain == chain) {
            bids.push_back({account(a.account), p.id});
            break;
          }
      }
      PoolHandle h{};
      if (vr.amm_pool) h = handle(*vr.amm_pool);
      const auto live = vault::anticoin_value(registries_.at(vr.chain.value).get(vr.id), mark);
      attempt(chain, kPerps, "liquidation_pass", {{"vault", vr.name}}, [&](json& ev) {
        const auto events = book.flag_and_liquidate(ledger_, h, sc_.perps.maintenance, mark, bids, height_, live);
        json out = json::array();
        for (const auto& e : events) {
          json je{{"position", e.position.value}, {"health", fx(e.health)}};
          je["kind"] = e.kind == perps::LiquidationEvent::Kind::Flagged      ? "flagged"
                       : e.kind == perps::LiquidationEvent::Kind::Liquidated ? "liquidated"
                                                                             : "rejected";
          if (e.liquidator) je["liquidator"] = e.liquidator->value;
          if (e.kind == perps::LiquidationEvent::Kind::Liquidated) {
            je["seized"] = fx(e.seized);
            je["liquidator_fee"] = fx(e.liquidator_fee);
            je["swapped_in"] = fx(e.swapped_in);
            je["numeraire_out"] = fx(e.numeraire_out);
          }
          if (!e.reason.empty()) je["reason"] = e.reason;
          out.push_back(je);
        }
        ev["events"] = out;
        if (out.empty()) ev["quiet"] = true;
      });
    }
  }

  // -------------------------------------------------------------------------
  // Phase 6: dispute deadlines

  void phase_deadlines(ChainId chain) {
    auto chain_of = [&](TokenId t) {
      auto it = token_spec_.find(t.value);
      return it == token_spec_.end() ? sc_.rugsafe_chain : sc_.tokens[it->second].chain;
    };
    for (const auto& c : rugproof_.claims()) {
      if (c.status != rugproof::ClaimStatus::Voting || height_ < c.challenge_end) continue;
      if (chain_of(rugproof_.issuance(c.issuance).token) != chain) continue;
      const CaseId id = c.id;
      attempt(chain, kDeadlines, "rug_claim_resolved", {{"claim", id.value}}, [&](json& ev) {
        const auto r = rugproof_.resolve_claim(ledger_, id, height_);
        ev["outcome"] = std::string(rugproof::to_string(r.outcome));
        ev["slashed"] = fx(r.slashed);
        ev["for_mass"] = fx(r.tally.for_mass);
        ev["against_mass"] = fx(r.tally.against_mass);
        ev["payouts"] = payouts_json(r.payouts);
      });
    }
    for (const auto& c : insurance_.claims()) {
      if (chain_of(insurance_.policy(c.policy).token) != chain) continue;
      const CaseId id = c.id;
      const auto status = c.status;
      if (status == insurance::ClaimStatus::Disputed && height_ >= c.vote_end) {
        attempt(chain, kDeadlines, "insurance_tallied", {{"claim", id.value}}, [&](json& ev) {
          ev["provisional"] = std::string(dispute::to_string(insurance_.tally(id, height_)));
        });
      } else if ((status == insurance::ClaimStatus::Open && height_ >= c.challenge_end) ||
                 (status == insurance::ClaimStatus::Tallied && height_ >= c.escalation_end)) {
        attempt(chain, kDeadlines, "insurance_resolved", {{"claim", id.value}}, [&](json& ev) {
          const auto r = insurance_.resolve_insurance(ledger_, id, height_);
          ev["outcome"] = std::string(insurance::to_string(r.outcome));
          ev["compensation"] = fx(r.compensation);
          ev["penalty"] = fx(r.penalty);
          ev["escalation_slashed"] = fx(r.escalation_slashed);
          ev["payouts"] = payouts_json(r.payouts);
        });
      }
    }
    for (const auto& p : insurance_.policies()) {
      if (p.status != insurance::PolicyStatus::Active || height_ < p.expires_at || chain_of(p.token) != chain) continue;
      const PolicyId id = p.id;
      attempt(chain, kDeadlines, "policy_expired", {{"policy", id.value}}, [&](json& ev) {
        std::vector<dispute::Payout> log;
        insurance_.expire(ledger_, id, height_, log);
        ev["payouts"] = payouts_json(log);
      });
    }
  }

  // -------------------------------------------------------------------------
  // Phases 7 and 8: bridge delivery and supply control on the Rugsafe chain

  Fixed rewards_this_block_{};

  void phase_bridge() {
    rewards_this_block_ = Fixed{};
    std::deque<BridgeMsg> keep;
    for (auto& m : bridge_) {
      const std::uint64_t due = m.source == sc_.rugsafe_chain ? m.height : m.height + sc_.bridge_delay;
      if (due > height_) {
        keep.push_back(std::move(m));
        continue;
      }
      attempt(sc_.rugsafe_chain, kBridge, "reward_minted",
              {{"source_chain", m.source.value},
               {"source_height", m.height},
               {"vault", m.reward.vault.value},
               {"kind", m.reward.kind == vault::RewardEvent::Kind::Deposit ? "deposit" : "burn"},
               {"base_amount", fx(m.reward.base_amount)}},
              [&](json& ev) {
                ledger_.mint(m.reward.beneficiary, rsf_, m.reward.reward);
                tokenomics::emit(supply_, m.reward.reward);
                rewards_this_block_ += m.reward.reward;
                ev["beneficiary"] = m.reward.beneficiary.value;
                ev["amount"] = fx(m.reward.reward);
              });
    }
    bridge_ = std::move(keep);
  }

  TokenomicsRow phase_tokenomics() {
    TokenomicsRow row;
    row.rewards = rewards_this_block_;
    const ChainId chain = sc_.rugsafe_chain;
    const Fixed before = ledger_.supply(rsf_) - rewards_this_block_;
    row.emission = tokenomics::block_emission(sc_.supply.epsilon_rate, 1);
    if (row.emission.is_positive()) {
      attempt(chain, kTokenomics, "emission", {{"amount", fx(row.emission)}}, [&](json&) {
        ledger_.mint(rsf_treasury_, rsf_, row.emission);
        tokenomics::emit(supply_, row.emission);
      });
    }
    std::vector<const vault::VaultRegistry*> regs;
    for (const auto& [id, reg] : registries_) regs.push_back(&reg);
    const auto report = tokenomics::aggregate_vault_stats(
        regs, [&](const vault::Vault& v) { return price_of(v.rugged_token, height_); });
    const auto step = tokenomics::burn_step(supply_, sc_.supply, report.sum_vaulted_value,
                                            ledger_.balance(rsf_treasury_, rsf_));
    row.target = step.target;
    row.burned = step.burned;
    if (step.burned.is_positive()) {
      attempt(chain, kTokenomics, "supply_burn",
              {{"burned", fx(step.burned)}, {"target", fx(step.target)},
               {"sum_vaulted_value", fx(report.sum_vaulted_value)}},
              [&](json&) { ledger_.burn(rsf_treasury_, rsf_, step.burned); });
    }
    const Fixed after = ledger_.supply(rsf_);
    require(after - before == row.emission + row.rewards - row.burned && supply_.current_supply == after &&
                supply_.consistent(),
            errc::state, "supply identity violated");
    return row;
  }

  // -------------------------------------------------------------------------

  Scenario sc_;
  Ledger ledger_;
  std::uint64_t height_ = 0;

  std::vector<std::string> token_symbols_;
  std::map<std::string, TokenId> token_ids_;
  std::map<std::uint32_t, std::size_t> token_spec_;
  std::map<std::string, AccountId> account_ids_;
  std::map<std::uint32_t, std::string> account_names_;
  std::map<std::uint32_t, std::string> owner_names_;
  TokenId numeraire_{};
  TokenId rsf_{};
  AccountId treasury_{};
  AccountId rsf_treasury_{};
  AccountId genesis_lp_{};

  std::vector<PoolRuntime> pools_;
  std::map<std::string, std::size_t> pool_by_name_;
  std::map<std::uint32_t, vault::VaultRegistry> registries_;
  std::vector<VaultRuntime> vaults_;
  std::map<std::string, std::size_t> vault_by_name_;
  std::map<std::uint32_t, std::size_t> anticoin_vault_;

  rugproof::RugproofBook rugproof_;
  insurance::InsuranceBook insurance_;
  detection::IntentBook intents_;
  std::map<std::size_t, detection::PoolMonitor> monitors_;
  std::map<std::size_t, PoolActivity> activity_;
  std::vector<PendingDrain> drains_;
  market::DrainOutcome last_drain_;
  std::map<std::uint32_t, Fixed> salvage_;
  std::map<std::string, Rng> rngs_;

  std::map<std::uint64_t, std::vector<QueuedTx>> queue_;
  std::uint64_t qseq_ = 0;
  std::deque<BridgeMsg> bridge_;
  tokenomics::SupplyState supply_;
  std::map<std::string, Fixed> owner_penalties_;

  std::vector<std::string> events_;
  std::vector<TelemetryRow> telemetry_;
  Fnv1a64 hasher_;
  std::uint64_t seq_ = 0;
  std::uint64_t failed_total_ = 0;
  std::map<std::uint32_t, std::uint64_t> block_failed_;
};

}  // namespace rugsim::harness
