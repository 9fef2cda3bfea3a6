// goest: simulate, solve and sweep remote-estimation scenarios, or serve
// the simulator to an external trainer over stdin/stdout.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "goest/goest.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCap = 3;

struct ScenarioArgs {
  std::string preset;
  std::string scenario;
  std::optional<double> ps;
  std::optional<double> v;
  std::optional<double> cmax;
  std::optional<std::uint64_t> horizon;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> burn_in;
  std::optional<std::string> policy;
  std::optional<double> slack;
  std::optional<std::string> policy_file;

  void add_to(CLI::App* app, bool with_policy) {
    app->add_option("--preset", preset, "Built-in scenario: s1, s2, s3, fig2, fig3, fig4, fig5");
    app->add_option("--scenario", scenario, "Scenario JSON file");
    app->add_option("--ps", ps, "Channel success probability");
    app->add_option("--V", v, "Penalty weight V (>= 0)");
    app->add_option("--cmax", cmax, "Average cost budget C_max");
    app->add_option("--T", horizon, "Horizon in slots");
    app->add_option("--seed", seed, "Random seed");
    app->add_option("--burn-in", burn_in, "Slots excluded from the averages");
    if (with_policy) {
      app->add_option("--policy", policy,
                      "dpp | source-agnostic | cost-free | solved-cmdp");
      app->add_option("--slack", slack, "Source-agnostic slack epsilon");
      app->add_option("--policy-file", policy_file, "Solved policy file for solved-cmdp");
    }
  }

  std::string name() const {
    if (!preset.empty()) return preset;
    return std::filesystem::path(scenario).stem().string();
  }

  goest::ScenarioConfig load() const {
    if (preset.empty() == scenario.empty())
      throw goest::ConfigError("give exactly one of --preset or --scenario");
    goest::ScenarioConfig cfg =
        preset.empty() ? goest::load_scenario(scenario) : goest::preset(preset);
    if (ps) cfg.channel.success_prob = *ps;
    if (v) cfg.penalty_weight = *v;
    if (cmax) cfg.cost_budget = *cmax;
    if (horizon) cfg.horizon = *horizon;
    if (seed) cfg.seed = *seed;
    if (burn_in) cfg.burn_in = *burn_in;
    if (policy) cfg.policy.type = goest::parse_policy_type(*policy);
    if (slack) cfg.policy.slack = *slack;
    if (policy_file) {
      cfg.policy.file = *policy_file;
      if (!policy) cfg.policy.type = goest::PolicyType::solved_cmdp;
    }
    cfg.validate();
    return cfg;
  }
};

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double x = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return x;
    } catch (const std::exception&) {
      throw goest::ConfigError("--values: cannot parse '" + s + "'");
    }
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw goest::ConfigError("--values range must be start:stop:step");
    const double start = number(parts[0]), stop = number(parts[1]), stride = number(parts[2]);
    if (!(stride > 0.0) || stop < start) throw goest::ConfigError("--values: empty or invalid range");
    const auto count = static_cast<long>(std::floor((stop - start) / stride + 1e-9));
    for (long i = 0; i <= count; ++i) {
      // Round to 12 digits so 0.1 steps print as 0.3, not 0.30000000000000004.
      out.push_back(std::round((start + static_cast<double>(i) * stride) * 1e12) / 1e12);
    }
  } else {
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');)
      if (!p.empty()) out.push_back(number(p));
  }
  if (out.empty()) throw goest::ConfigError("--values is empty");
  return out;
}

void print_result(std::ostream& os, const goest::SimulationResult& r) {
  os.precision(10);
  os << "policy " << r.policy << '\n'
     << "horizon " << r.horizon << '\n'
     << "seed " << r.seed << '\n'
     << "avg_cae " << r.avg_cae << " +- " << r.cae_std_error << '\n'
     << "avg_cost " << r.avg_cost << " +- " << r.cost_std_error << '\n'
     << "final_queue " << r.final_queue << '\n'
     << "max_tail_queue_rate " << r.max_tail_queue_rate << '\n'
     << "tx_counts";
  for (auto c : r.per_source_tx_counts) os << ' ' << c;
  os << '\n';
}

int cmd_simulate(const ScenarioArgs& args, const std::string& out) {
  const auto cfg = args.load();
  const auto r = goest::run(cfg);
  print_result(std::cout, r);
  if (!out.empty()) {
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot write " + out);
    goest::SweepRow row{r.policy, cfg.channel.success_prob, 0, r};
    goest::write_sweep_csv(os, goest::SweepAxis::success_prob, {row});
  }
  return 0;
}

int cmd_solve(const ScenarioArgs& args, double xi, double tol, double rvi_tol, std::size_t cap,
              const std::string& out) {
  const auto cfg = args.load();
  const auto mdp = goest::build_product_mdp(cfg.sources, cfg.channel, cap);
  goest::BisectionOptions opt;
  opt.perturbation = xi;
  opt.bisect_tol = tol;
  opt.rvi.tol = rvi_tol;
  const auto p = goest::bisection_solve(mdp, cfg.cost_budget, opt);
  std::cout.precision(12);
  std::cout << "states " << mdp.num_states() << '\n'
            << "kind " << (p.kind == goest::PolicyKind::mixture ? "mixture" : "deterministic")
            << '\n'
            << "multiplier " << p.multiplier << '\n'
            << "beta " << p.beta << '\n'
            << "avg_cae " << p.avg_cae << '\n'
            << "avg_cost " << p.avg_cost << '\n';
  if (p.degenerate) std::cout << "degenerate true\n";
  if (!out.empty()) goest::save_policy(out, p, mdp.codec());
  return 0;
}

int cmd_sweep(const ScenarioArgs& args, const std::string& axis_name, const std::string& values,
              std::size_t replications, const std::string& policies, const std::string& out_dir,
              std::size_t threads) {
  const auto base = args.load();
  const auto axis = goest::parse_sweep_axis(axis_name);
  const auto grid = parse_values(values);
  std::vector<goest::PolicySpec> specs;
  if (!policies.empty()) {
    std::stringstream ss(policies);
    for (std::string p; std::getline(ss, p, ',');) {
      goest::PolicySpec s = base.policy;
      s.type = goest::parse_policy_type(p);
      specs.push_back(s);
    }
  }
  const auto rows = goest::sweep(base, axis, grid, replications, specs, threads);
  std::filesystem::create_directories(out_dir);
  const auto stem = std::filesystem::path(out_dir) / args.name();
  {
    std::ofstream os(stem.string() + ".csv");
    if (!os) throw std::runtime_error("cannot write " + stem.string() + ".csv");
    goest::write_sweep_csv(os, axis, rows);
  }
  const auto summary = goest::summarize(rows);
  {
    std::ofstream os(stem.string() + "_summary.csv");
    goest::write_summary_csv(os, axis, summary);
  }
  goest::write_summary_csv(std::cout, axis, summary);
  std::cerr << "wrote " << stem.string() << ".csv\n";
  return 0;
}

int cmd_env_server(const ScenarioArgs& args, bool include_queue_obs) {
  goest::EnvSession session(args.load(), include_queue_obs);
  session.serve(std::cin, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal-oriented sampling of Markov sources: simulator, solver and env-server"};
  app.require_subcommand(1);

  ScenarioArgs sim_args, solve_args, sweep_args, env_args;

  auto* sim = app.add_subcommand("simulate", "Run one scenario and print averages");
  sim_args.add_to(sim, true);
  std::string sim_out;
  sim->add_option("--out", sim_out, "Write a one-row CSV");

  auto* solve = app.add_subcommand("solve", "Solve the constrained MDP exactly");
  solve_args.add_to(solve, false);
  double xi = 1e-3, bisect_tol = 1e-6, rvi_tol = 1e-9;
  std::size_t cap = goest::kDefaultStateCap;
  std::string solve_out;
  solve->add_option("--xi", xi, "Multiplier perturbation for the mixture");
  solve->add_option("--tol", bisect_tol, "Bisection tolerance on the multiplier");
  solve->add_option("--rvi-tol", rvi_tol, "Relative value iteration span tolerance");
  solve->add_option("--cap", cap, "Maximum joint state count");
  solve->add_option("--out", solve_out, "Policy file to write");

  auto* sw = app.add_subcommand("sweep", "Sweep one parameter and write CSV");
  sweep_args.add_to(sw, true);
  std::string axis, values, policies, out_dir = ".";
  std::size_t replications = 1, threads = 0;
  sw->add_option("--axis", axis, "ps | V | sources")->required();
  sw->add_option("--values", values, "Comma list or start:stop:step")->required();
  sw->add_option("--replications", replications, "Replications per point");
  sw->add_option("--policies", policies, "Comma list of policies (default: scenario policy)");
  sw->add_option("--out", out_dir, "Output directory");
  sw->add_option("--threads", threads, "Worker threads (0 = hardware)");

  auto* env = app.add_subcommand("env-server", "Serve the environment over stdin/stdout");
  env_args.add_to(env, false);
  bool queue_obs = false;
  env->add_flag("--include-queue-obs", queue_obs, "Append Z/(1+Z) to observations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*sim) return cmd_simulate(sim_args, sim_out);
    if (*solve) return cmd_solve(solve_args, xi, bisect_tol, rvi_tol, cap, solve_out);
    if (*sw) return cmd_sweep(sweep_args, axis, values, replications, policies, out_dir, threads);
    if (*env) return cmd_env_server(env_args, queue_obs);
  } catch (const goest::StateSpaceCapError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCap;
  } catch (const goest::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
