#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "dynamics.hpp"
#include "error.hpp"

namespace goest {

// Virtual queue whose stability enforces the average-cost budget.
struct VirtualQueue {
  double backlog = 0.0;
};

// Z' = max(Z - budget, 0) + C_t
inline VirtualQueue queue_update(VirtualQueue q, double slot_cost, double cost_budget) {
  return VirtualQueue{std::max(q.backlog - cost_budget, 0.0) + slot_cost};
}

// Quadratic Lyapunov function L(Z) = Z^2 / 2.
inline double lyapunov(VirtualQueue q) { return 0.5 * q.backlog * q.backlog; }

struct DppConfig {
  double penalty_weight = 100.0;  // V
  double cost_budget = 0.4;       // C_max

  void validate() const {
    if (!(penalty_weight >= 0.0) || !std::isfinite(penalty_weight))
      throw ConfigError("V must be >= 0");
    if (!(cost_budget > 0.0) || !std::isfinite(cost_budget))
      throw ConfigError("C_max must be > 0");
  }
};

namespace detail {

// sum_k cae(k, estimate) * P(truth, k); the k == estimate term is zero.
inline double cae_column(const MarkovSource& source, StateIndex truth, StateIndex estimate) {
  const auto row = source.transition.row(truth);
  double total = 0.0;
  for (StateIndex k = 0; k < row.size(); ++k) {
    if (k == estimate || row[k] == 0.0) continue;
    total += source.cae(k, estimate) * row[k];
  }
  return total;
}

}  // namespace detail

// Closed-form one-slot expected CAE of a single (unweighted) source.
inline double expected_source_cae(const MarkovSource& source, SubState sub, bool sampled,
                                  Channel channel) {
  const double stays = detail::cae_column(source, sub.truth, sub.estimate);
  if (!sampled || sub.truth == sub.estimate) return stays;
  const double refreshed = detail::cae_column(source, sub.truth, sub.truth);
  return channel.success_prob * refreshed + (1.0 - channel.success_prob) * stays;
}

// One-slot expected weighted CAE of taking `action` in `state`.
inline double expected_cae(const SystemState& state, Action action,
                           std::span<const MarkovSource> sources, Channel channel) {
  check_state(state, sources);
  check_action(action, sources.size());
  double total = 0.0;
  for (std::size_t m = 0; m < sources.size(); ++m) {
    const bool sampled = !action.is_idle() && action.source() == m;
    total += sources[m].weight * expected_source_cae(sources[m], state.pairs[m], sampled, channel);
  }
  return total;
}

struct DppDecision {
  Action action;
  std::vector<double> scores;  // per action 0..M: Z (C(a) - C_max) + V * expected CAE
};

// Scores every action and returns the argmin; ties go to the smallest index.
inline DppDecision dpp_evaluate(const SystemState& state, VirtualQueue q, const DppConfig& cfg,
                                std::span<const MarkovSource> sources, Channel channel) {
  check_state(state, sources);
  // Actions differ only in the sampled source's term, so each score is the
  // idle score plus that source's increment (exactly equal when it is zero).
  double idle_total = 0.0;
  for (std::size_t m = 0; m < sources.size(); ++m)
    idle_total += sources[m].weight * expected_source_cae(sources[m], state.pairs[m], false, channel);

  DppDecision d;
  d.scores.resize(sources.size() + 1);
  d.scores[0] = -q.backlog * cfg.cost_budget + cfg.penalty_weight * idle_total;
  std::size_t best = 0;
  for (std::size_t m = 0; m < sources.size(); ++m) {
    const auto sub = state.pairs[m];
    const double gain = sources[m].weight *
                        (expected_source_cae(sources[m], sub, true, channel) -
                         expected_source_cae(sources[m], sub, false, channel));
    d.scores[m + 1] = d.scores[0] + q.backlog * sources[m].sampling_cost + cfg.penalty_weight * gain;
    if (d.scores[m + 1] < d.scores[best]) best = m + 1;
  }
  d.action = Action{best};
  return d;
}

inline Action dpp_decide(const SystemState& state, VirtualQueue q, const DppConfig& cfg,
                         std::span<const MarkovSource> sources, Channel channel) {
  return dpp_evaluate(state, q, cfg, sources, channel).action;
}

// Drift-plus-penalty policy with its own virtual queue (Z_0 = 0).
// Per slot: decide() on the observed state, apply, then observe() the cost.
class DppPolicy {
 public:
  DppPolicy(DppConfig cfg, std::span<const MarkovSource> sources, Channel channel)
      : cfg_(cfg), sources_(sources), channel_(channel) {
    cfg_.validate();
  }

  template <typename Rng>
  Action decide(const SystemState& state, Rng&) const {
    return dpp_decide(state, queue_, cfg_, sources_, channel_);
  }

  void observe(const StepOutcome& outcome) {
    queue_ = queue_update(queue_, outcome.cost, cfg_.cost_budget);
  }

  VirtualQueue queue() const noexcept { return queue_; }

 private:
  DppConfig cfg_;
  std::span<const MarkovSource> sources_;
  Channel channel_;
  VirtualQueue queue_{};
};

}  // namespace goest
