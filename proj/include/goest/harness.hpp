#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "baselines.hpp"
#include "cmdp.hpp"
#include "dpp.hpp"
#include "dynamics.hpp"
#include "error.hpp"
#include "policy_io.hpp"
#include "random.hpp"
#include "sources.hpp"

namespace goest {

enum class PolicyType { dpp, source_agnostic, cost_free, solved_cmdp, external };

inline std::string to_string(PolicyType t) {
  switch (t) {
    case PolicyType::dpp: return "dpp";
    case PolicyType::source_agnostic: return "source-agnostic";
    case PolicyType::cost_free: return "cost-free";
    case PolicyType::solved_cmdp: return "solved-cmdp";
    case PolicyType::external: return "external";
  }
  return "unknown";
}

inline PolicyType parse_policy_type(const std::string& s) {
  if (s == "dpp") return PolicyType::dpp;
  if (s == "source-agnostic") return PolicyType::source_agnostic;
  if (s == "cost-free") return PolicyType::cost_free;
  if (s == "solved-cmdp") return PolicyType::solved_cmdp;
  if (s == "external") return PolicyType::external;
  throw ConfigError("unknown policy '" + s +
                    "' (expected dpp, source-agnostic, cost-free, solved-cmdp or external)");
}

struct PolicySpec {
  PolicyType type = PolicyType::dpp;
  double slack = 0.0;  // source-agnostic only
  std::string file;    // solved-cmdp: policy file; empty means solve in-process

  friend bool operator==(const PolicySpec&, const PolicySpec&) = default;
};

struct ScenarioConfig {
  std::vector<MarkovSource> sources;
  Channel channel;
  double cost_budget = 0.4;      // C_max
  double penalty_weight = 100.0; // V
  std::uint64_t horizon = 1'000'000;
  std::uint64_t seed = 1;
  std::uint64_t burn_in = 0;
  PolicySpec policy;

  DppConfig dpp() const { return DppConfig{penalty_weight, cost_budget}; }

  std::vector<double> sampling_costs() const {
    std::vector<double> c;
    for (const auto& s : sources) c.push_back(s.sampling_cost);
    return c;
  }

  void validate() const {
    if (sources.empty()) throw ConfigError("scenario needs at least one source");
    for (const auto& s : sources) goest::validate(s);
    channel.validate();
    dpp().validate();
    if (horizon < 1) throw ConfigError("horizon T must be >= 1");
    if (burn_in >= horizon) throw ConfigError("burn-in must be shorter than the horizon");
    if (policy.type == PolicyType::source_agnostic)
      SourceAgnosticPolicy(cost_budget, policy.slack, sampling_costs());
  }

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

struct QueueSample {
  std::uint64_t slot;  // t
  double backlog;      // Z_t
  friend bool operator==(const QueueSample&, const QueueSample&) = default;
};

struct SimulationResult {
  std::string policy;
  double avg_cae = 0.0;
  double avg_cost = 0.0;
  double cae_std_error = 0.0;   // batch-means standard error
  double cost_std_error = 0.0;
  std::vector<QueueSample> queue_trace;
  double final_queue = 0.0;         // Z_T
  double max_tail_queue_rate = 0.0; // max Z_t / t over the last 10% of slots
  std::vector<std::uint64_t> per_source_tx_counts;
  std::uint64_t seed = 0;
  std::uint64_t horizon = 0;

  friend bool operator==(const SimulationResult&, const SimulationResult&) = default;
};

inline constexpr std::size_t kTraceTarget = 10'000;
inline constexpr std::size_t kBatches = 100;

namespace detail {

struct BatchMeans {
  std::uint64_t n = 0;
  std::uint64_t batch_size = 1;
  double total = 0.0;
  double current = 0.0;
  std::uint64_t in_batch = 0;
  std::vector<double> means;

  explicit BatchMeans(std::uint64_t count) : n(count) {
    batch_size = count >= 2 * kBatches ? count / kBatches : 1;
  }

  void add(double x) {
    total += x;
    current += x;
    if (++in_batch == batch_size) {
      means.push_back(current / static_cast<double>(batch_size));
      current = 0.0;
      in_batch = 0;
    }
  }

  double mean() const { return n ? total / static_cast<double>(n) : 0.0; }

  double std_error() const {
    const std::size_t b = means.size();
    if (b < 2) return 0.0;
    double mu = 0.0;
    for (double m : means) mu += m;
    mu /= static_cast<double>(b);
    double ss = 0.0;
    for (double m : means) ss += (m - mu) * (m - mu);
    return std::sqrt(ss / static_cast<double>(b - 1) / static_cast<double>(b));
  }
};

}  // namespace detail

// Simulates `horizon` slots from the all-correct initial state. Per slot:
// observe, decide, step, then update the policy and the metric queue.
// Dynamics and policy randomness use separate streams derived from the seed.
template <typename Policy>
SimulationResult simulate(const ScenarioConfig& cfg, Policy& policy, RandomStream& policy_rng) {
  const std::span<const MarkovSource> sources(cfg.sources);
  RandomStream rng(cfg.seed);
  SystemState state = SystemState::initial(sources.size());
  VirtualQueue queue{};

  SimulationResult r;
  r.seed = cfg.seed;
  r.horizon = cfg.horizon;
  r.per_source_tx_counts.assign(sources.size(), 0);
  const std::uint64_t counted = cfg.horizon - cfg.burn_in;
  detail::BatchMeans cae(counted), cost(counted);
  const std::uint64_t decimation = (cfg.horizon + kTraceTarget - 1) / kTraceTarget;
  const std::uint64_t tail_start = cfg.horizon - cfg.horizon / 10;
  r.queue_trace.reserve(kTraceTarget + 1);
  r.queue_trace.push_back({0, 0.0});

  for (std::uint64_t t = 0; t < cfg.horizon; ++t) {
    const Action a = policy.decide(state, policy_rng);
    StepOutcome out = step(state, a, sources, cfg.channel, rng);
    policy.observe(out);
    queue = queue_update(queue, out.cost, cfg.cost_budget);
    if (t >= cfg.burn_in) {
      cae.add(out.cae);
      cost.add(out.cost);
      if (!a.is_idle()) ++r.per_source_tx_counts[a.source()];
    }
    const std::uint64_t slot = t + 1;
    if (slot % decimation == 0) r.queue_trace.push_back({slot, queue.backlog});
    if (slot >= tail_start)
      r.max_tail_queue_rate =
          std::max(r.max_tail_queue_rate, queue.backlog / static_cast<double>(slot));
    state = std::move(out.next_state);
  }
  r.avg_cae = cae.mean();
  r.avg_cost = cost.mean();
  r.cae_std_error = cae.std_error();
  r.cost_std_error = cost.std_error();
  r.final_queue = queue.backlog;
  return r;
}

// Solved policy for a scenario: loaded from the configured file, or solved
// in-process when no file is given.
inline SolvedPolicy scenario_policy(const ScenarioConfig& cfg, const ProductMdp& mdp) {
  if (cfg.policy.type == PolicyType::cost_free) return solve_cost_free(mdp);
  if (cfg.policy.file.empty()) return bisection_solve(mdp, cfg.cost_budget);
  auto loaded = load_policy(cfg.policy.file);
  if (loaded.state_sizes != mdp.codec().state_sizes())
    throw ConfigError("policy file " + cfg.policy.file +
                      " does not match the scenario's source dimensions");
  return std::move(loaded.policy);
}

inline SimulationResult run(const ScenarioConfig& cfg) {
  cfg.validate();
  RandomStream policy_rng(mix_seed(cfg.seed));
  SimulationResult r;
  switch (cfg.policy.type) {
    case PolicyType::dpp: {
      DppPolicy p(cfg.dpp(), cfg.sources, cfg.channel);
      r = simulate(cfg, p, policy_rng);
      break;
    }
    case PolicyType::source_agnostic: {
      SourceAgnosticPolicy p(cfg.cost_budget, cfg.policy.slack, cfg.sampling_costs());
      r = simulate(cfg, p, policy_rng);
      break;
    }
    case PolicyType::cost_free:
    case PolicyType::solved_cmdp: {
      const auto mdp = build_product_mdp(cfg.sources, cfg.channel);
      const auto solved = scenario_policy(cfg, mdp);
      auto p = TablePolicy::for_episode(mdp.codec(), solved, policy_rng);
      r = simulate(cfg, p, policy_rng);
      break;
    }
    case PolicyType::external:
      throw ConfigError("external policies drive the simulator through env-server, not run()");
  }
  r.policy = to_string(cfg.policy.type);
  return r;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepAxis { success_prob, penalty_weight, num_sources };

inline std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::success_prob: return "ps";
    case SweepAxis::penalty_weight: return "V";
    case SweepAxis::num_sources: return "sources";
  }
  return "unknown";
}

inline SweepAxis parse_sweep_axis(const std::string& s) {
  if (s == "ps" || s == "p_s") return SweepAxis::success_prob;
  if (s == "V" || s == "v") return SweepAxis::penalty_weight;
  if (s == "sources" || s == "num_sources") return SweepAxis::num_sources;
  throw ConfigError("unknown sweep axis '" + s + "' (expected ps, V or sources)");
}

inline ScenarioConfig apply_axis(ScenarioConfig cfg, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::success_prob:
      cfg.channel.success_prob = value;
      break;
    case SweepAxis::penalty_weight:
      cfg.penalty_weight = value;
      break;
    case SweepAxis::num_sources: {
      const auto n = static_cast<std::size_t>(std::llround(value));
      if (n < 1 || static_cast<double>(n) != value || n > cfg.sources.size())
        throw ConfigError("source count must be an integer in 1.." + std::to_string(cfg.sources.size()));
      cfg.sources.resize(n);
      break;
    }
  }
  return cfg;
}

struct SweepRow {
  std::string policy;
  double value = 0.0;
  std::size_t replication = 0;
  SimulationResult result;
};

// Runs every (policy, value, replication) point, replication r with seed
// base.seed + r. Points run in parallel; output order is
// (policy, value, replication) regardless of scheduling.
inline std::vector<SweepRow> sweep(const ScenarioConfig& base, SweepAxis axis,
                                   std::span<const double> values, std::size_t replications,
                                   std::span<const PolicySpec> policies = {},
                                   std::size_t threads = 0) {
  if (replications == 0) throw ConfigError("replications must be >= 1");
  std::vector<PolicySpec> specs(policies.begin(), policies.end());
  if (specs.empty()) specs.push_back(base.policy);

  std::vector<ScenarioConfig> jobs;
  std::vector<SweepRow> rows;
  for (const auto& spec : specs)
    for (double v : values)
      for (std::size_t r = 0; r < replications; ++r) {
        ScenarioConfig cfg = apply_axis(base, axis, v);
        cfg.policy = spec;
        cfg.seed = base.seed + r;
        cfg.validate();
        jobs.push_back(std::move(cfg));
        rows.push_back(SweepRow{to_string(spec.type), v, r, {}});
      }

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, jobs.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        rows[i].result = run(jobs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

struct SweepSummary {
  std::string policy;
  double value = 0.0;
  std::size_t replications = 0;
  double mean_cae = 0.0, cae_std_error = 0.0;
  double mean_cost = 0.0, cost_std_error = 0.0;
};

// Mean +- standard error across replications; with one replication the
// within-run batch-means error is reported instead.
inline std::vector<SweepSummary> summarize(const std::vector<SweepRow>& rows) {
  std::vector<SweepSummary> out;
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i;
    while (j < rows.size() && rows[j].policy == rows[i].policy && rows[j].value == rows[i].value) ++j;
    SweepSummary s{rows[i].policy, rows[i].value, j - i};
    for (std::size_t k = i; k < j; ++k) {
      s.mean_cae += rows[k].result.avg_cae;
      s.mean_cost += rows[k].result.avg_cost;
    }
    const double n = static_cast<double>(s.replications);
    s.mean_cae /= n;
    s.mean_cost /= n;
    if (s.replications == 1) {
      s.cae_std_error = rows[i].result.cae_std_error;
      s.cost_std_error = rows[i].result.cost_std_error;
    } else {
      double vc = 0.0, vk = 0.0;
      for (std::size_t k = i; k < j; ++k) {
        vc += std::pow(rows[k].result.avg_cae - s.mean_cae, 2);
        vk += std::pow(rows[k].result.avg_cost - s.mean_cost, 2);
      }
      s.cae_std_error = std::sqrt(vc / (n - 1.0) / n);
      s.cost_std_error = std::sqrt(vk / (n - 1.0) / n);
    }
    out.push_back(s);
    i = j;
  }
  return out;
}

namespace detail {

// Grid values print short (0.3, not 0.29999999999999999).
inline std::string grid_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace detail

// One row per run:
// policy,axis,value,replication,seed,avg_cae,avg_cost,cae_se,cost_se,final_queue,tx_1..tx_K
inline void write_sweep_csv(std::ostream& os, SweepAxis axis, const std::vector<SweepRow>& rows) {
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.result.per_source_tx_counts.size());
  os << "policy,axis,value,replication,seed,avg_cae,avg_cost,cae_se,cost_se,final_queue";
  for (std::size_t m = 0; m < width; ++m) os << ",tx_" << m + 1;
  os << '\n';
  const auto old = os.precision(17);
  for (const auto& r : rows) {
    os << r.policy << ',' << to_string(axis) << ',' << detail::grid_value(r.value) << ','
       << r.replication << ','
       << r.result.seed << ',' << r.result.avg_cae << ',' << r.result.avg_cost << ','
       << r.result.cae_std_error << ',' << r.result.cost_std_error << ',' << r.result.final_queue;
    for (std::size_t m = 0; m < width; ++m) {
      os << ',';
      if (m < r.result.per_source_tx_counts.size()) os << r.result.per_source_tx_counts[m];
    }
    os << '\n';
  }
  os.precision(old);
}

inline void write_summary_csv(std::ostream& os, SweepAxis axis,
                              const std::vector<SweepSummary>& rows) {
  os << "policy,axis,value,replications,mean_cae,cae_se,mean_cost,cost_se\n";
  const auto old = os.precision(17);
  for (const auto& s : rows)
    os << s.policy << ',' << to_string(axis) << ',' << detail::grid_value(s.value) << ','
       << s.replications << ','
       << s.mean_cae << ',' << s.cae_std_error << ',' << s.mean_cost << ',' << s.cost_std_error
       << '\n';
  os.precision(old);
}

// ---------------------------------------------------------------------------
// Evaluation scenarios

inline MarkovSource source_s1() {
  return make_source("S1",
                     SquareMatrix{{0.8, 0.2, 0.0, 0.0},
                                  {0.1, 0.8, 0.1, 0.0},
                                  {0.0, 0.1, 0.8, 0.1},
                                  {0.0, 0.0, 0.2, 0.8}},
                     SquareMatrix{{0, 10, 50, 30},
                                  {10, 0, 40, 20},
                                  {20, 10, 0, 10},
                                  {30, 20, 40, 0}});
}

inline MarkovSource two_state_source(std::string name, double p, double q) {
  return make_source(std::move(name), two_state_transition(p, q), SquareMatrix{{0, 5}, {1, 0}});
}

// Slow-varying two-state source.
inline MarkovSource source_s2() { return two_state_source("S2", 0.1, 0.15); }
// Fast-varying two-state source.
inline MarkovSource source_s3() { return two_state_source("S3", 0.2, 0.7); }

inline ScenarioConfig make_scenario(std::vector<MarkovSource> sources, double ps, double cmax,
                                    double v) {
  ScenarioConfig c;
  c.sources = std::move(sources);
  c.channel = Channel{ps};
  c.cost_budget = cmax;
  c.penalty_weight = v;
  c.horizon = 1'000'000;
  c.seed = 1;
  return c;
}

// s1/s2/s3: single sources. fig2/fig3: S1 swept over p_s. fig4: S1 at
// p_s = 0.4 swept over V. fig5: S1+S2+S3 swept over the source count.
inline std::map<std::string, ScenarioConfig> presets() {
  return {
      {"s1", make_scenario({source_s1()}, 0.6, 0.4, 100.0)},
      {"s2", make_scenario({source_s2()}, 0.6, 0.4, 100.0)},
      {"s3", make_scenario({source_s3()}, 0.6, 0.4, 100.0)},
      {"fig2", make_scenario({source_s1()}, 0.6, 0.4, 100.0)},
      {"fig3", make_scenario({source_s1()}, 0.6, 0.4, 100.0)},
      {"fig4", make_scenario({source_s1()}, 0.4, 0.4, 100.0)},
      {"fig5", make_scenario({source_s1(), source_s2(), source_s3()}, 0.6, 0.8, 100.0)},
  };
}

inline ScenarioConfig preset(const std::string& name) {
  auto all = presets();
  auto it = all.find(name);
  if (it == all.end()) {
    std::string known;
    for (const auto& [k, _] : all) known += (known.empty() ? "" : ", ") + k;
    throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
  }
  return it->second;
}

}  // namespace goest
