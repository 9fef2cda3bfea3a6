#pragma once

#include <array>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmdp.hpp"
#include "error.hpp"

namespace goest {

// Solved-policy file (JSON):
//
//   {
//     "format": "goest-policy", "version": 1,
//     "kind": "deterministic" | "mixture",
//     "state_sizes": [N_1, ..., N_M],
//     "states": [[[x_1, xhat_1], ..., [x_M, xhat_M]], ...],   // 1-based, joint index order
//     "tables": [[a_0, a_1, ...], ...],                        // one or two action tables
//     "beta": b, "multiplier": g, "multipliers": [g - xi, g + xi],
//     "table_avg_cae": [..], "table_avg_cost": [..],
//     "avg_cae": d, "avg_cost": c, "degenerate": false
//   }
//
// "states" is informational; tables are indexed by the joint state order.

inline nlohmann::json policy_to_json(const SolvedPolicy& p, const JointStateCodec& codec) {
  nlohmann::json j;
  j["format"] = "goest-policy";
  j["version"] = 1;
  j["kind"] = p.kind == PolicyKind::mixture ? "mixture" : "deterministic";
  j["state_sizes"] = codec.state_sizes();
  auto states = nlohmann::json::array();
  for (std::size_t s = 0; s < codec.num_states(); ++s) {
    auto pairs = nlohmann::json::array();
    for (const auto& sub : codec.decode(s).pairs) pairs.push_back({sub.truth + 1, sub.estimate + 1});
    states.push_back(std::move(pairs));
  }
  j["states"] = std::move(states);
  j["tables"] = p.tables;
  j["beta"] = p.beta;
  j["multiplier"] = p.multiplier;
  j["multipliers"] = p.multipliers;
  j["table_avg_cae"] = p.table_cae;
  j["table_avg_cost"] = p.table_cost;
  j["avg_cae"] = p.avg_cae;
  j["avg_cost"] = p.avg_cost;
  j["degenerate"] = p.degenerate;
  return j;
}

struct LoadedPolicy {
  SolvedPolicy policy;
  std::vector<std::size_t> state_sizes;
};

inline LoadedPolicy policy_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "goest-policy")
      throw ConfigError("policy file: unknown format");
    LoadedPolicy out;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "mixture") {
      out.policy.kind = PolicyKind::mixture;
    } else if (kind == "deterministic") {
      out.policy.kind = PolicyKind::deterministic;
    } else {
      throw ConfigError("policy file: kind must be 'deterministic' or 'mixture'");
    }
    out.state_sizes = j.at("state_sizes").get<std::vector<std::size_t>>();
    out.policy.tables = j.at("tables").get<std::vector<PolicyTable>>();
    out.policy.beta = j.at("beta").get<double>();
    out.policy.multiplier = j.at("multiplier").get<double>();
    out.policy.multipliers = j.value("multipliers", std::array<double, 2>{});
    out.policy.table_cae = j.value("table_avg_cae", std::array<double, 2>{});
    out.policy.table_cost = j.value("table_avg_cost", std::array<double, 2>{});
    out.policy.avg_cae = j.at("avg_cae").get<double>();
    out.policy.avg_cost = j.at("avg_cost").get<double>();
    out.policy.degenerate = j.value("degenerate", false);

    const std::size_t want = out.policy.kind == PolicyKind::mixture ? 2 : 1;
    if (out.policy.tables.size() != want)
      throw ConfigError("policy file: expected " + std::to_string(want) + " action table(s)");
    if (!(out.policy.beta >= 0.0 && out.policy.beta <= 1.0))
      throw ConfigError("policy file: beta must lie in [0,1]");
    const JointStateCodec codec(out.state_sizes, std::numeric_limits<std::size_t>::max());
    for (const auto& t : out.policy.tables) {
      if (t.size() != codec.num_states())
        throw ConfigError("policy file: table length does not match state_sizes");
      for (auto a : t)
        if (a > out.state_sizes.size()) throw ConfigError("policy file: action out of range");
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("policy file: ") + e.what());
  }
}

inline void save_policy(const std::string& path, const SolvedPolicy& p, const JointStateCodec& codec) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write policy file " + path);
  os << policy_to_json(p, codec).dump(2) << '\n';
}

inline LoadedPolicy load_policy(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open policy file " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("policy file " + path + ": " + e.what());
  }
  return policy_from_json(j);
}

}  // namespace goest
