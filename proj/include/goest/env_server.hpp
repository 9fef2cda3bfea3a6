#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "dpp.hpp"
#include "dynamics.hpp"
#include "harness.hpp"
#include "random.hpp"

namespace goest {

// One environment session for an external trainer, speaking newline-delimited
// JSON: one request object per line, one reply object per line.
//
//   {"cmd":"reset","seed":7}  -> {"obs":[x_1,xhat_1,...]}
//   {"cmd":"step","action":a} -> {"obs":[...],"reward":r,"done":false,
//                                 "info":{"cae":..,"cost":..,"z":..,"channel_ok":..,"slot":..}}
//   {"cmd":"close"}           -> {"closed":true}
//
// Observations are 1-based state indices, 2M entries, plus Z/(1+Z) when
// queue observations are enabled. The reward is the negative realized
// drift-plus-penalty, -(Z'^2/2 - Z^2/2 + V * CAE). Bad requests get an
// {"error":...} reply and the session stays usable.
class EnvSession {
 public:
  EnvSession(ScenarioConfig cfg, bool include_queue_obs)
      : cfg_(std::move(cfg)), include_queue_obs_(include_queue_obs), rng_(cfg_.seed),
        state_(SystemState::initial(cfg_.sources.size())) {
    cfg_.validate();
  }

  nlohmann::json reset(std::uint64_t seed) {
    rng_ = RandomStream(seed);
    state_ = SystemState::initial(cfg_.sources.size());
    queue_ = VirtualQueue{};
    slot_ = 0;
    return {{"obs", observation()}};
  }

  nlohmann::json step(std::size_t selected) {
    const Action action{selected};
    check_action(action, cfg_.sources.size());
    const auto out = goest::step(state_, action, cfg_.sources, cfg_.channel, rng_);
    const VirtualQueue next = queue_update(queue_, out.cost, cfg_.cost_budget);
    const double reward = -(lyapunov(next) - lyapunov(queue_) + cfg_.penalty_weight * out.cae);
    state_ = out.next_state;
    queue_ = next;
    ++slot_;
    return {{"obs", observation()},
            {"reward", reward},
            {"done", false},
            {"info",
             {{"cae", out.cae},
              {"cost", out.cost},
              {"z", queue_.backlog},
              {"channel_ok", out.channel_ok},
              {"slot", slot_}}}};
  }

  // Handles one request line and returns the reply line (without newline).
  std::string handle(const std::string& line) {
    nlohmann::json reply;
    try {
      const auto req = nlohmann::json::parse(line);
      if (!req.is_object() || !req.contains("cmd") || !req["cmd"].is_string())
        throw std::invalid_argument("request must be an object with a string 'cmd'");
      const auto cmd = req["cmd"].get<std::string>();
      if (cmd == "reset") {
        std::uint64_t seed = cfg_.seed;
        if (req.contains("seed")) {
          if (!req["seed"].is_number_unsigned())
            throw std::invalid_argument("'seed' must be a non-negative integer");
          seed = req["seed"].get<std::uint64_t>();
        }
        reply = reset(seed);
      } else if (cmd == "step") {
        if (!req.contains("action") || !req["action"].is_number_integer())
          throw std::invalid_argument("'step' needs an integer 'action'");
        const auto a = req["action"].get<std::int64_t>();
        if (a < 0) throw std::out_of_range("action must be >= 0");
        reply = step(static_cast<std::size_t>(a));
      } else if (cmd == "close") {
        closed_ = true;
        reply = {{"closed", true}};
      } else {
        throw std::invalid_argument("unknown cmd '" + cmd + "'");
      }
    } catch (const std::exception& e) {
      reply = {{"error", e.what()}};
    }
    return reply.dump();
  }

  // Serves requests until close or end of input.
  void serve(std::istream& in, std::ostream& out) {
    std::string line;
    while (!closed_ && std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      out << handle(line) << '\n' << std::flush;
    }
  }

  bool closed() const noexcept { return closed_; }
  std::size_t observation_size() const noexcept {
    return 2 * cfg_.sources.size() + (include_queue_obs_ ? 1 : 0);
  }
  const SystemState& state() const noexcept { return state_; }
  VirtualQueue queue() const noexcept { return queue_; }

 private:
  nlohmann::json observation() const {
    auto obs = nlohmann::json::array();
    for (const auto& p : state_.pairs) {
      obs.push_back(p.truth + 1);
      obs.push_back(p.estimate + 1);
    }
    if (include_queue_obs_) obs.push_back(queue_.backlog / (1.0 + queue_.backlog));
    return obs;
  }

  ScenarioConfig cfg_;
  bool include_queue_obs_ = false;
  RandomStream rng_;
  SystemState state_;
  VirtualQueue queue_{};
  std::uint64_t slot_ = 0;
  bool closed_ = false;
};

}  // namespace goest
