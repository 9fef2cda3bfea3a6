#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>
#include <vector>

#include "dynamics.hpp"
#include "error.hpp"
#include "random.hpp"

namespace goest {

// Source-agnostic randomized sampling: source m is chosen with probability
// (C_max - slack) / (M c_m), idle otherwise, so the expected slot cost is
// C_max - slack regardless of state or queue.
class SourceAgnosticPolicy {
 public:
  SourceAgnosticPolicy(double cost_budget, double slack, std::span<const double> costs) {
    if (!(slack >= 0.0 && slack <= cost_budget))
      throw ConfigError("source-agnostic slack must lie in [0, C_max]");
    if (costs.empty()) throw ConfigError("source-agnostic policy needs at least one source");
    const double m = static_cast<double>(costs.size());
    double total = 0.0;
    probabilities_.reserve(costs.size());
    for (double c : costs) {
      if (!(c > 0.0)) throw ConfigError("sampling costs must be > 0");
      const double p = (cost_budget - slack) / (m * c);
      probabilities_.push_back(p);
      total += p;
    }
    if (total > 1.0 + 1e-12) {
      std::ostringstream os;
      os << "source-agnostic sampling probabilities sum to " << total << " > 1";
      throw ConfigError(os.str());
    }
  }

  // Probability of each action 0..M.
  std::vector<double> action_probabilities() const {
    std::vector<double> out;
    out.reserve(probabilities_.size() + 1);
    double sampled = 0.0;
    for (double p : probabilities_) sampled += p;
    out.push_back(std::max(0.0, 1.0 - sampled));
    out.insert(out.end(), probabilities_.begin(), probabilities_.end());
    return out;
  }

  // One uniform draw per decision.
  template <UniformSource Rng>
  Action decide(Rng& rng) const {
    const double u = rng.uniform();
    double cumulative = 0.0;
    for (std::size_t m = 0; m < probabilities_.size(); ++m) {
      cumulative += probabilities_[m];
      if (u < cumulative) return Action{m + 1};
    }
    return Action::idle();
  }

  // Policy-interface overload; the state is ignored.
  template <UniformSource Rng>
  Action decide(const SystemState&, Rng& rng) const {
    return decide(rng);
  }

  void observe(const StepOutcome&) {}

 private:
  std::vector<double> probabilities_;
};

inline Action source_agnostic_decide(std::size_t num_sources, double cost_budget, double slack,
                                     std::span<const double> costs, RandomStream& rng) {
  if (costs.size() != num_sources) throw ConfigError("cost list does not match the source count");
  return SourceAgnosticPolicy(cost_budget, slack, costs).decide(rng);
}

}  // namespace goest
