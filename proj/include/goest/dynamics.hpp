#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "error.hpp"
#include "random.hpp"
#include "sources.hpp"

namespace goest {

// (true state, destination estimate) of one source.
struct SubState {
  StateIndex truth = 0;
  StateIndex estimate = 0;

  friend bool operator==(const SubState&, const SubState&) = default;
};

struct SystemState {
  std::vector<SubState> pairs;

  std::size_t num_sources() const noexcept { return pairs.size(); }

  // Every source in its first state with a correct estimate.
  static SystemState initial(std::size_t num_sources) {
    return SystemState{std::vector<SubState>(num_sources)};
  }

  friend bool operator==(const SystemState&, const SystemState&) = default;
};

// 0 = stay idle, m = sample source m (1-based, as in the action set {0,...,M}).
struct Action {
  std::size_t selected = 0;

  static constexpr Action idle() noexcept { return Action{0}; }
  constexpr bool is_idle() const noexcept { return selected == 0; }
  // 0-based index of the sampled source; only meaningful when !is_idle().
  constexpr std::size_t source() const noexcept { return selected - 1; }

  friend bool operator==(const Action&, const Action&) = default;
};

struct Channel {
  double success_prob = 1.0;

  void validate() const {
    if (!(success_prob >= 0.0 && success_prob <= 1.0))
      throw ConfigError("channel success probability must lie in [0,1]");
  }

  friend bool operator==(const Channel&, const Channel&) = default;
};

struct StepOutcome {
  SystemState next_state;
  double cae = 0.0;
  double cost = 0.0;
  bool channel_ok = false;  // only meaningful when an update was sent
};

inline void check_state(const SystemState& state, std::span<const MarkovSource> sources) {
  if (state.num_sources() != sources.size()) {
    std::ostringstream os;
    os << "system state has " << state.num_sources() << " sources, scenario has "
       << sources.size();
    throw std::invalid_argument(os.str());
  }
  for (std::size_t m = 0; m < sources.size(); ++m) {
    check_state_index(sources[m], state.pairs[m].truth);
    check_state_index(sources[m], state.pairs[m].estimate);
  }
}

inline void check_action(Action action, std::size_t num_sources) {
  if (action.selected > num_sources) {
    std::ostringstream os;
    os << "action " << action.selected << " is outside 0.." << num_sources;
    throw std::out_of_range(os.str());
  }
}

// Resource cost C_t of an action.
inline double action_cost(Action action, std::span<const MarkovSource> sources) {
  return action.is_idle() ? 0.0 : sources[action.source()].sampling_cost;
}

// Weighted CAE of a state: sum_m w_m * cae_m(truth, estimate).
inline double state_cae(const SystemState& state, std::span<const MarkovSource> sources) {
  double total = 0.0;
  for (std::size_t m = 0; m < sources.size(); ++m) {
    const auto [truth, estimate] = state.pairs[m];
    total += sources[m].weight * sources[m].cae(truth, estimate);
  }
  return total;
}

// Advances the system by one slot.
//
// Draw order is fixed: one channel draw if an update is sent, then one draw
// per source in ascending index. A delivered update carries the true state
// from the start of the slot, so the estimate lags by one slot. The CAE is
// charged on the post-transition pair.
template <UniformSource Rng>
StepOutcome step(const SystemState& state, Action action, std::span<const MarkovSource> sources,
                 Channel channel, Rng& rng) {
  check_state(state, sources);
  check_action(action, sources.size());

  StepOutcome out;
  out.next_state = state;
  if (!action.is_idle()) {
    out.channel_ok = rng.uniform() < channel.success_prob;
    if (out.channel_ok) {
      const std::size_t m = action.source();
      out.next_state.pairs[m].estimate = state.pairs[m].truth;
    }
  }
  for (std::size_t m = 0; m < sources.size(); ++m) {
    out.next_state.pairs[m].truth = sample_next(sources[m], state.pairs[m].truth, rng);
  }
  out.cae = state_cae(out.next_state, sources);
  out.cost = action_cost(action, sources);
  return out;
}

struct SubTransition {
  SubState next;
  double probability = 0.0;

  friend bool operator==(const SubTransition&, const SubTransition&) = default;
};

// Exact one-slot kernel of a single source's (truth, estimate) pair.
// Outcomes with zero probability are omitted; duplicates (the truth ==
// estimate case, where success and failure coincide) are merged.
inline std::vector<SubTransition> sub_kernel(const MarkovSource& source, SubState sub,
                                             bool sampled, Channel channel) {
  check_state_index(source, sub.truth);
  check_state_index(source, sub.estimate);
  const auto row = source.transition.row(sub.truth);
  std::vector<SubTransition> out;
  out.reserve(2 * row.size());

  auto add = [&](SubState next, double p) {
    if (p <= 0.0) return;
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const SubTransition& t) { return t.next == next; });
    if (it != out.end()) {
      it->probability += p;
    } else {
      out.push_back({next, p});
    }
  };

  for (StateIndex k = 0; k < row.size(); ++k) {
    if (row[k] <= 0.0) continue;
    if (!sampled) {
      add({k, sub.estimate}, row[k]);
    } else if (sub.truth == sub.estimate) {
      add({k, sub.estimate}, row[k]);
    } else {
      add({k, sub.truth}, row[k] * channel.success_prob);
      add({k, sub.estimate}, row[k] * (1.0 - channel.success_prob));
    }
  }
  return out;
}

}  // namespace goest
