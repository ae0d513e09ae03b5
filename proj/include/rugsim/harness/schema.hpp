#pragma once

#include <string_view>

namespace rugsim::harness {

/// Published scenario schema; docs/scenario-schema.json holds the same text.
inline constexpr std::string_view kScenarioSchema = R"schema({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "rugsim scenario",
  "type": "object",
  "additionalProperties": false,
  "required": ["seed", "chains", "numeraire", "tokens"],
  "$defs": {
    "decimal": {
      "description": "Decimal with at most 9 fractional digits, as a JSON number or string.",
      "oneOf": [{"type": "number"}, {"type": "string", "pattern": "^-?[0-9]+(\\.[0-9]{1,9})?$"}]
    },
    "amount": {
      "description": "Decimal, or \"all\" for the account's full balance.",
      "oneOf": [{"$ref": "#/$defs/decimal"}, {"const": "all"}]
    },
    "chain": {"type": "integer", "minimum": 0},
    "process": {
      "type": "object",
      "additionalProperties": false,
      "required": ["kind"],
      "properties": {
        "kind": {"enum": ["scam", "catastrophic", "sentiment"]},
        "p0": {"$ref": "#/$defs/decimal"},
        "tau_rug": {"$ref": "#/$defs/decimal"},
        "lambda": {"$ref": "#/$defs/decimal"},
        "alpha_sent": {"$ref": "#/$defs/decimal"},
        "epsilon_floor": {"$ref": "#/$defs/decimal"},
        "onset": {"type": "integer", "minimum": 0}
      }
    },
    "vault_params": {
      "type": "object",
      "additionalProperties": false,
      "description": "theta must exceed omega; penalty_lambda must exceed 1.",
      "properties": {
        "receipt_kind": {"enum": ["fungible", "nonfungible", "refungible"]},
        "omega": {"$ref": "#/$defs/decimal"},
        "theta": {"$ref": "#/$defs/decimal"},
        "penalty_k": {"$ref": "#/$defs/decimal"},
        "penalty_lambda": {"$ref": "#/$defs/decimal"},
        "gamma_base": {"$ref": "#/$defs/decimal"},
        "delta_gamma": {"$ref": "#/$defs/decimal"}
      }
    },
    "op": {
      "type": "object",
      "required": ["at", "op"],
      "description": "Script step executed at block `at`. Arguments depend on `op`; see README.",
      "properties": {
        "at": {"type": "integer", "minimum": 1},
        "op": {
          "enum": ["drain", "swap", "add_liquidity", "remove_liquidity", "mint", "transfer", "deposit", "burn",
                   "withdraw", "intent", "open_position", "close_position", "issue_bonded", "rug_claim", "vote_rug",
                   "issue_policy", "claim_insurance", "join_claim", "dispute_claim", "vote_claim", "escalate"]
        }
      }
    }
  },
  "properties": {
    "name": {"type": "string"},
    "seed": {"type": "integer", "minimum": 0},
    "blocks": {"type": "integer", "minimum": 1},
    "chains": {
      "type": "array",
      "minItems": 1,
      "items": {
        "type": "object",
        "additionalProperties": false,
        "required": ["id"],
        "properties": {"id": {"$ref": "#/$defs/chain"}, "name": {"type": "string"}}
      }
    },
    "rugsafe_chain": {"$ref": "#/$defs/chain"},
    "bridge_delay": {"type": "integer", "minimum": 0},
    "numeraire": {"type": "string"},
    "tokens": {
      "type": "array",
      "items": {
        "type": "object",
        "additionalProperties": false,
        "required": ["symbol"],
        "properties": {
          "symbol": {"type": "string", "not": {"pattern": "(^RSF$)|(\\.ca$)"}},
          "chain": {"$ref": "#/$defs/chain"},
          "process": {"$ref": "#/$defs/process"},
          "price": {"$ref": "#/$defs/decimal"}
        }
      }
    },
    "accounts": {
      "type": "array",
      "items": {
        "type": "object",
        "additionalProperties": false,
        "required": ["name"],
        "properties": {
          "name": {"type": "string"},
          "owner": {"type": "string"},
          "balances": {"type": "object", "additionalProperties": {"$ref": "#/$defs/decimal"}}
        }
      }
    },
    "pools": {
      "type": "array",
      "items": {
        "type": "object",
        "additionalProperties": false,
        "required": ["name", "x", "y"],
        "properties": {
          "name": {"type": "string"},
          "chain": {"$ref": "#/$defs/chain"},
          "x": {"type": "string"},
          "y": {"type": "string"},
          "fee_bps": {"type": "integer", "minimum": 0, "maximum": 9999},
          "reserve_x": {"$ref": "#/$defs/decimal"},
          "reserve_y": {"$ref": "#/$defs/decimal"}
        }
      }
    },
    "vaults": {
      "type": "array",
      "items": {
        "type": "object",
        "additionalProperties": false,
        "required": ["name", "token"],
        "properties": {
          "name": {"type": "string"},
          "chain": {"$ref": "#/$defs/chain"},
          "token": {"type": "string"},
          "params": {"$ref": "#/$defs/vault_params"},
          "amm_pool": {"type": "string"}
        }
      }
    },
    "supply": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "s0": {"$ref": "#/$defs/decimal"},
        "epsilon_rate": {"$ref": "#/$defs/decimal"},
        "beta_burn": {"$ref": "#/$defs/decimal"},
        "kappa": {"$ref": "#/$defs/decimal"},
        "initial_supply": {"$ref": "#/$defs/decimal"}
      }
    },
    "perps": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "leverage_max": {"$ref": "#/$defs/decimal"},
        "live_revaluation": {"type": "boolean"},
        "alpha_base": {"$ref": "#/$defs/decimal"},
        "l_min": {"$ref": "#/$defs/decimal"},
        "interval_blocks": {"type": "integer", "minimum": 1},
        "maintenance_fraction": {"$ref": "#/$defs/decimal"},
        "liquidator_deadline_blocks": {"type": "integer", "minimum": 0},
        "liquidator_fee_fraction": {"$ref": "#/$defs/decimal"}
      }
    },
    "rugproof": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "alpha_slash": {"$ref": "#/$defs/decimal"},
        "gamma_slash": {"$ref": "#/$defs/decimal"},
        "claimant_share": {"$ref": "#/$defs/decimal"},
        "z_min": {"$ref": "#/$defs/decimal"},
        "challenge_blocks": {"type": "integer", "minimum": 1},
        "x_min": {"$ref": "#/$defs/decimal"},
        "forfeit_losing_deposits": {"type": "boolean"}
      }
    },
    "insurance": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "alpha_comp": {"$ref": "#/$defs/decimal"},
        "gamma_pen": {"$ref": "#/$defs/decimal"},
        "escalation_bond_multiplier": {"$ref": "#/$defs/decimal"},
        "max_escalations": {"type": "integer", "minimum": 0},
        "x_min": {"$ref": "#/$defs/decimal"},
        "z_min": {"$ref": "#/$defs/decimal"},
        "tau_challenge": {"type": "integer", "minimum": 1},
        "tau_vote": {"type": "integer", "minimum": 1}
      }
    },
    "detection": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "drop_threshold": {"$ref": "#/$defs/decimal"},
        "mint_spike_factor": {"$ref": "#/$defs/decimal"},
        "wallet_outflow_fraction": {"$ref": "#/$defs/decimal"},
        "volume_spike_factor": {"$ref": "#/$defs/decimal"},
        "window": {"type": "integer", "minimum": 1}
      }
    },
    "peg_keeper": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "tolerance": {"$ref": "#/$defs/decimal"},
        "max_iterations": {"type": "integer", "minimum": 1}
      }
    },
    "protocol_priority": {"type": "integer"},
    "agents": {
      "type": "array",
      "items": {
        "type": "object",
        "additionalProperties": false,
        "required": ["name", "kind", "account"],
        "properties": {
          "name": {"type": "string"},
          "kind": {"enum": ["Creator", "Retail", "Whale", "LP", "Solver", "Liquidator", "PegKeeper", "Detector"]},
          "account": {"type": "string"},
          "chain": {"$ref": "#/$defs/chain"},
          "script": {"type": "array", "items": {"$ref": "#/$defs/op"}},
          "noise": {
            "type": "object",
            "additionalProperties": false,
            "required": ["pool", "probability", "max_amount"],
            "properties": {
              "pool": {"type": "string"},
              "probability": {"$ref": "#/$defs/decimal"},
              "max_amount": {"$ref": "#/$defs/decimal"}
            }
          },
          "fee_bps": {"type": "integer", "minimum": 0, "maximum": 10000},
          "pool": {"type": "string"},
          "vault": {"type": "string"},
          "budget": {"$ref": "#/$defs/decimal"},
          "pools": {"type": "array", "items": {"type": "string"}},
          "protect": {"type": "array", "items": {"type": "string"}},
          "frontrun": {"type": "boolean"},
          "sandwich_budget": {"$ref": "#/$defs/decimal"},
          "backrun_budget": {"$ref": "#/$defs/decimal"},
          "backrun_cap": {"$ref": "#/$defs/decimal"},
          "deposit_salvage": {"type": "boolean"}
        }
      }
    }
  }
}
)schema";

}  // namespace rugsim::harness
