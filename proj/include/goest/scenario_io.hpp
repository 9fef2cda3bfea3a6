#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "harness.hpp"

namespace goest {

// Scenario file (JSON). Matrices are nested row arrays; every state index
// that appears in files or protocol messages is 1-based.
//
//   {
//     "sources": [{"name": "S1", "transition": [[...]], "cae": [[...]],
//                  "weight": 1, "sampling_cost": 1}],
//     "channel": {"success_prob": 0.6},
//     "cost_budget": 0.4, "penalty_weight": 100,
//     "horizon": 1000000, "seed": 1, "burn_in": 0,
//     "policy": {"type": "dpp", "slack": 0, "file": ""}
//   }
//
// Only "sources" is required; other fields take the defaults shown.

namespace detail {

template <typename T>
T field(const nlohmann::json& j, const char* key, const std::string& path, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + key + ": wrong type");
  }
}

template <typename T>
T required(const nlohmann::json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError(path + key + ": missing");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + key + ": wrong type");
  }
}

}  // namespace detail

inline nlohmann::json source_to_json(const MarkovSource& s) {
  return {{"name", s.name},
          {"transition", s.transition.to_rows()},
          {"cae", s.cae.to_rows()},
          {"weight", s.weight},
          {"sampling_cost", s.sampling_cost}};
}

inline MarkovSource source_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  try {
    using Rows = std::vector<std::vector<double>>;
    auto transition = SquareMatrix::from_rows(detail::required<Rows>(j, "transition", path + "."));
    auto cae = SquareMatrix::from_rows(detail::required<Rows>(j, "cae", path + "."));
    return make_source(detail::field<std::string>(j, "name", path + ".", ""), std::move(transition),
                       std::move(cae), detail::field<double>(j, "weight", path + ".", 1.0),
                       detail::field<double>(j, "sampling_cost", path + ".", 1.0));
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.rfind(path, 0) == 0) throw;
    throw ConfigError(path + ": " + what);
  }
}

inline nlohmann::json scenario_to_json(const ScenarioConfig& c) {
  nlohmann::json j;
  auto sources = nlohmann::json::array();
  for (const auto& s : c.sources) sources.push_back(source_to_json(s));
  j["sources"] = std::move(sources);
  j["channel"] = {{"success_prob", c.channel.success_prob}};
  j["cost_budget"] = c.cost_budget;
  j["penalty_weight"] = c.penalty_weight;
  j["horizon"] = c.horizon;
  j["seed"] = c.seed;
  j["burn_in"] = c.burn_in;
  j["policy"] = {{"type", to_string(c.policy.type)}, {"slack", c.policy.slack}, {"file", c.policy.file}};
  return j;
}

// Parses and validates a scenario; errors name the offending field.
inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("scenario: expected a JSON object");
  ScenarioConfig c;
  if (!j.contains("sources") || !j["sources"].is_array())
    throw ConfigError("sources: missing or not an array");
  for (std::size_t m = 0; m < j["sources"].size(); ++m)
    c.sources.push_back(source_from_json(j["sources"][m], "sources[" + std::to_string(m) + "]"));
  if (j.contains("channel")) {
    if (!j["channel"].is_object()) throw ConfigError("channel: expected an object");
    c.channel.success_prob = detail::field<double>(j["channel"], "success_prob", "channel.", 1.0);
  }
  c.cost_budget = detail::field<double>(j, "cost_budget", "", c.cost_budget);
  c.penalty_weight = detail::field<double>(j, "penalty_weight", "", c.penalty_weight);
  c.horizon = detail::field<std::uint64_t>(j, "horizon", "", c.horizon);
  c.seed = detail::field<std::uint64_t>(j, "seed", "", c.seed);
  c.burn_in = detail::field<std::uint64_t>(j, "burn_in", "", c.burn_in);
  if (j.contains("policy")) {
    const auto& p = j["policy"];
    if (!p.is_object()) throw ConfigError("policy: expected an object");
    c.policy.type = parse_policy_type(detail::field<std::string>(p, "type", "policy.", "dpp"));
    c.policy.slack = detail::field<double>(p, "slack", "policy.", 0.0);
    c.policy.file = detail::field<std::string>(p, "file", "policy.", "");
  }
  c.validate();
  return c;
}

inline ScenarioConfig parse_scenario(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  return scenario_from_json(j);
}

inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open scenario file " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  try {
    return parse_scenario(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline void save_scenario(const std::string& path, const ScenarioConfig& c) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write scenario file " + path);
  os << scenario_to_json(c).dump(2) << '\n';
}

}  // namespace goest
