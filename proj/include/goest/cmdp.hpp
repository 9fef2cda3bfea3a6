#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "dynamics.hpp"
#include "error.hpp"
#include "random.hpp"
#include "sources.hpp"

namespace goest {

inline constexpr std::size_t kDefaultStateCap = 1'000'000;

// Mixed-radix encoding of a SystemState into a joint index. Source 0 is the
// most significant digit; each digit is truth * N_m + estimate. Index 0 is
// the all-correct state with every source in its first state.
class JointStateCodec {
 public:
  JointStateCodec() = default;

  JointStateCodec(std::vector<std::size_t> state_sizes, std::size_t cap = kDefaultStateCap)
      : sizes_(std::move(state_sizes)), strides_(sizes_.size()) {
    std::size_t total = 1;
    for (std::size_t m = sizes_.size(); m-- > 0;) {
      strides_[m] = total;
      const std::size_t digits = sizes_[m] * sizes_[m];
      if (digits == 0) throw ConfigError("source with zero states");
      if (total > cap / digits) {
        std::ostringstream os;
        os << "joint state space exceeds the exact-solver cap of " << cap
           << " states; use the drift-plus-penalty policy for this scenario";
        throw StateSpaceCapError(os.str());
      }
      total *= digits;
    }
    num_states_ = total;
  }

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_sources() const noexcept { return sizes_.size(); }
  const std::vector<std::size_t>& state_sizes() const noexcept { return sizes_; }
  std::size_t stride(std::size_t m) const { return strides_[m]; }

  std::size_t digit(SubState sub, std::size_t m) const { return sub.truth * sizes_[m] + sub.estimate; }

  std::size_t encode(const SystemState& s) const {
    std::size_t idx = 0;
    for (std::size_t m = 0; m < sizes_.size(); ++m) idx += digit(s.pairs[m], m) * strides_[m];
    return idx;
  }

  SystemState decode(std::size_t idx) const {
    SystemState s = SystemState::initial(sizes_.size());
    for (std::size_t m = 0; m < sizes_.size(); ++m) {
      const std::size_t d = (idx / strides_[m]) % (sizes_[m] * sizes_[m]);
      s.pairs[m] = SubState{d / sizes_[m], d % sizes_[m]};
    }
    return s;
  }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> strides_;
  std::size_t num_states_ = 1;
};

// Explicit finite MDP over the joint (truth, estimate) space. Rows are
// indexed by (state, action) and stored in CSR form.
class ProductMdp {
 public:
  struct Entry {
    std::size_t next;
    double probability;
  };

  std::size_t num_states() const noexcept { return codec_.num_states(); }
  std::size_t num_actions() const noexcept { return num_actions_; }
  const JointStateCodec& codec() const noexcept { return codec_; }
  std::size_t initial_state() const noexcept { return 0; }

  std::span<const Entry> row(std::size_t state, std::size_t action) const {
    const std::size_t r = state * num_actions_ + action;
    return {entries_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }

  double stage_cae(std::size_t state, std::size_t action) const {
    return stage_cae_[state * num_actions_ + action];
  }
  double stage_cost(std::size_t action) const { return stage_cost_[action]; }

 private:
  friend ProductMdp build_product_mdp(std::span<const MarkovSource>, Channel, std::size_t);

  JointStateCodec codec_;
  std::size_t num_actions_ = 1;
  std::vector<std::size_t> offsets_;
  std::vector<Entry> entries_;
  std::vector<double> stage_cae_;
  std::vector<double> stage_cost_;
};

// Builds the joint kernel as the product of per-source sub-kernels (only the
// selected source takes the sampled branch). The stage CAE is the exact
// expectation of the realized CAE under that kernel.
inline ProductMdp build_product_mdp(std::span<const MarkovSource> sources, Channel channel,
                                    std::size_t state_cap = kDefaultStateCap) {
  if (sources.empty()) throw ConfigError("scenario has no sources");
  for (const auto& s : sources) validate(s);
  channel.validate();

  std::vector<std::size_t> sizes;
  for (const auto& s : sources) sizes.push_back(s.num_states());

  ProductMdp mdp;
  mdp.codec_ = JointStateCodec(sizes, state_cap);
  const std::size_t num_sources = sources.size();
  mdp.num_actions_ = num_sources + 1;

  // sub[m][sampled][digit] -> outcomes as (digit, probability, weighted cae)
  struct Piece {
    std::size_t digit;
    double probability;
    double cae;
  };
  std::vector<std::array<std::vector<std::vector<Piece>>, 2>> sub(num_sources);
  for (std::size_t m = 0; m < num_sources; ++m) {
    const auto& src = sources[m];
    const std::size_t n = src.num_states();
    for (int sampled = 0; sampled < 2; ++sampled) {
      auto& table = sub[m][sampled];
      table.resize(n * n);
      for (StateIndex i = 0; i < n; ++i) {
        for (StateIndex j = 0; j < n; ++j) {
          for (const auto& t : sub_kernel(src, {i, j}, sampled == 1, channel)) {
            table[i * n + j].push_back({t.next.truth * n + t.next.estimate, t.probability,
                                        src.weight * src.cae(t.next.truth, t.next.estimate)});
          }
        }
      }
    }
  }

  const std::size_t rows = mdp.num_states() * mdp.num_actions_;
  mdp.offsets_.reserve(rows + 1);
  mdp.offsets_.push_back(0);
  mdp.stage_cae_.reserve(rows);

  struct Partial {
    std::size_t index;
    double probability;
    double cae;
  };
  std::vector<Partial> current, next;
  const auto& codec = mdp.codec_;
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    const SystemState state = codec.decode(s);
    for (std::size_t a = 0; a < mdp.num_actions_; ++a) {
      current.assign(1, Partial{0, 1.0, 0.0});
      for (std::size_t m = 0; m < num_sources; ++m) {
        const int sampled = (a == m + 1) ? 1 : 0;
        const auto& pieces = sub[m][sampled][codec.digit(state.pairs[m], m)];
        next.clear();
        for (const auto& c : current)
          for (const auto& p : pieces)
            next.push_back({c.index + p.digit * codec.stride(m), c.probability * p.probability,
                            c.cae + p.cae});
        std::swap(current, next);
      }
      std::sort(current.begin(), current.end(),
                [](const Partial& x, const Partial& y) { return x.index < y.index; });
      double expected = 0.0;
      for (const auto& c : current) {
        mdp.entries_.push_back({c.index, c.probability});
        expected += c.probability * c.cae;
      }
      mdp.offsets_.push_back(mdp.entries_.size());
      mdp.stage_cae_.push_back(expected);
    }
  }

  mdp.stage_cost_.assign(mdp.num_actions_, 0.0);
  for (std::size_t m = 0; m < num_sources; ++m) mdp.stage_cost_[m + 1] = sources[m].sampling_cost;
  return mdp;
}

// Deterministic stationary policy: action index per joint state.
using PolicyTable = std::vector<std::size_t>;

struct RviOptions {
  double tol = 1e-9;
  std::size_t max_iter = 100'000;
  double self_loop = 0.01;  // aperiodicity transform P' = (1 - a) P + a I
};

struct RviResult {
  PolicyTable policy;
  double gain = 0.0;  // long-run average of stage_cae + multiplier * stage_cost
  std::size_t iterations = 0;
  double span = 0.0;
};

namespace detail {

inline double lagrangian_q(const ProductMdp& mdp, const std::vector<double>& h, std::size_t s,
                           std::size_t a, double multiplier, double keep) {
  double expect = 0.0;
  for (const auto& e : mdp.row(s, a)) expect += e.probability * h[e.next];
  return mdp.stage_cae(s, a) + multiplier * mdp.stage_cost(a) + keep * expect;
}

}  // namespace detail

// Relative value iteration for the average-cost Lagrangian MDP with stage
// cost stage_cae + multiplier * stage_cost. Reference state is the joint
// state 0; iteration stops when the span of successive value differences
// drops to tol. Greedy ties go to the smallest action index.
inline RviResult relative_value_iteration(const ProductMdp& mdp, double multiplier,
                                          const RviOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw std::invalid_argument("RVI tolerance must be > 0");
  if (!(multiplier >= 0.0)) throw std::invalid_argument("Lagrange multiplier must be >= 0");
  const std::size_t n = mdp.num_states();
  const std::size_t ref = mdp.initial_state();
  const double keep = 1.0 - opt.self_loop;

  std::vector<double> h(n, 0.0), th(n, 0.0);
  RviResult result;
  double lo = 0.0, hi = 0.0;
  bool converged = false;
  for (std::size_t it = 1; it <= opt.max_iter; ++it) {
    for (std::size_t s = 0; s < n; ++s) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < mdp.num_actions(); ++a)
        best = std::min(best, detail::lagrangian_q(mdp, h, s, a, multiplier, keep));
      th[s] = best + opt.self_loop * h[s];
    }
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (std::size_t s = 0; s < n; ++s) {
      const double d = th[s] - h[s];
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    const double offset = th[ref];
    for (std::size_t s = 0; s < n; ++s) h[s] = th[s] - offset;
    result.iterations = it;
    result.span = hi - lo;
    if (result.span <= opt.tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::ostringstream os;
    os << "relative value iteration did not converge in " << opt.max_iter
       << " iterations (final span " << result.span << ")";
    throw ConvergenceError(os.str());
  }
  result.gain = 0.5 * (lo + hi);

  result.policy.resize(n);
  std::vector<double> q(mdp.num_actions());
  for (std::size_t s = 0; s < n; ++s) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      q[a] = detail::lagrangian_q(mdp, h, s, a, multiplier, keep);
      best = std::min(best, q[a]);
    }
    const double slack = 1e-10 * std::max(1.0, std::abs(best));
    std::size_t chosen = 0;
    while (q[chosen] > best + slack) ++chosen;
    result.policy[s] = chosen;
  }
  return result;
}

struct PolicyEvaluation {
  double avg_cae = 0.0;
  double avg_cost = 0.0;
  double residual = 0.0;  // max |pi P - pi| over the recurrent classes used
  std::size_t recurrent_classes = 0;
};

namespace detail {

// Strongly connected components of a sparse digraph (iterative Tarjan).
inline std::vector<std::size_t> strong_components(const std::vector<std::vector<std::size_t>>& adj,
                                                  std::size_t& count) {
  const std::size_t n = adj.size();
  constexpr std::size_t unset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> index(n, unset), low(n, 0), comp(n, unset);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::pair<std::size_t, std::size_t>> call;  // (node, next edge)
  std::size_t counter = 0;
  count = 0;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != unset) continue;
    call.push_back({root, 0});
    while (!call.empty()) {
      auto& [v, edge] = call.back();
      if (edge == 0 && index[v] == unset) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
      }
      if (edge < adj[v].size()) {
        const std::size_t w = adj[v][edge++];
        if (index[w] == unset) {
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = count;
        } while (w != v);
        ++count;
      }
      const std::size_t done = v;
      call.pop_back();
      if (!call.empty()) {
        const std::size_t parent = call.back().first;
        low[parent] = std::min(low[parent], low[done]);
      }
    }
  }
  return comp;
}

using SparseMatrix = Eigen::SparseMatrix<double>;

inline Eigen::VectorXd sparse_solve(const SparseMatrix& a, const Eigen::VectorXd& b) {
  Eigen::SparseLU<SparseMatrix> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success) throw ConvergenceError("sparse factorization failed");
  Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success) throw ConvergenceError("sparse solve failed");
  return x;
}

}  // namespace detail

// Exact long-run averages of a deterministic policy from the initial joint
// state (all sources in state 1, estimates correct). The induced chain may
// be multichain: each recurrent class reachable from the initial state
// contributes its stationary averages weighted by its absorption probability.
inline PolicyEvaluation evaluate_policy(const ProductMdp& mdp, const PolicyTable& policy) {
  if (policy.size() != mdp.num_states())
    throw std::invalid_argument("policy table does not cover every joint state");
  for (auto a : policy)
    if (a >= mdp.num_actions()) throw std::out_of_range("policy table has an invalid action");

  // Reachable subgraph from the initial state, renumbered locally.
  constexpr std::size_t unset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> local(mdp.num_states(), unset);
  std::vector<std::size_t> global{mdp.initial_state()};
  local[mdp.initial_state()] = 0;
  for (std::size_t i = 0; i < global.size(); ++i) {
    const std::size_t s = global[i];
    for (const auto& e : mdp.row(s, policy[s])) {
      if (e.probability > 0.0 && local[e.next] == unset) {
        local[e.next] = global.size();
        global.push_back(e.next);
      }
    }
  }
  const std::size_t n = global.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& e : mdp.row(global[i], policy[global[i]]))
      if (e.probability > 0.0) adj[i].push_back(local[e.next]);

  std::size_t num_comp = 0;
  const auto comp = detail::strong_components(adj, num_comp);
  std::vector<bool> closed(num_comp, true);
  for (std::size_t i = 0; i < n; ++i)
    for (auto j : adj[i])
      if (comp[j] != comp[i]) closed[comp[i]] = false;

  std::vector<double> stage_cae(n), stage_cost(n);
  for (std::size_t i = 0; i < n; ++i) {
    stage_cae[i] = mdp.stage_cae(global[i], policy[global[i]]);
    stage_cost[i] = mdp.stage_cost(policy[global[i]]);
  }

  // Absorption probabilities from the initial state into each closed class.
  std::vector<double> absorb(num_comp, 0.0);
  if (closed[comp[0]]) {
    absorb[comp[0]] = 1.0;
  } else {
    std::vector<std::size_t> transient_pos(n, unset);
    std::vector<std::size_t> transient;
    for (std::size_t i = 0; i < n; ++i)
      if (!closed[comp[i]]) {
        transient_pos[i] = transient.size();
        transient.push_back(i);
      }
    const auto t = static_cast<Eigen::Index>(transient.size());
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t r = 0; r < transient.size(); ++r) {
      trip.emplace_back(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r), 1.0);
      const std::size_t i = transient[r];
      for (const auto& e : mdp.row(global[i], policy[global[i]])) {
        const std::size_t j = local[e.next];
        if (transient_pos[j] != unset)
          trip.emplace_back(static_cast<Eigen::Index>(r),
                            static_cast<Eigen::Index>(transient_pos[j]), -e.probability);
      }
    }
    detail::SparseMatrix a(t, t);
    a.setFromTriplets(trip.begin(), trip.end());
    for (std::size_t c = 0; c < num_comp; ++c) {
      if (!closed[c]) continue;
      Eigen::VectorXd b = Eigen::VectorXd::Zero(t);
      bool any = false;
      for (std::size_t r = 0; r < transient.size(); ++r) {
        const std::size_t i = transient[r];
        for (const auto& e : mdp.row(global[i], policy[global[i]]))
          if (comp[local[e.next]] == c) {
            b(static_cast<Eigen::Index>(r)) += e.probability;
            any = true;
          }
      }
      if (!any) continue;
      const Eigen::VectorXd x = detail::sparse_solve(a, b);
      absorb[c] = x(static_cast<Eigen::Index>(transient_pos[0]));
    }
  }

  PolicyEvaluation out;
  for (std::size_t c = 0; c < num_comp; ++c) {
    if (!closed[c] || absorb[c] <= 0.0) continue;
    ++out.recurrent_classes;
    std::vector<std::size_t> members;
    std::vector<std::size_t> pos(n, unset);
    for (std::size_t i = 0; i < n; ++i)
      if (comp[i] == c) {
        pos[i] = members.size();
        members.push_back(i);
      }
    const auto k = static_cast<Eigen::Index>(members.size());
    // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t r = 0; r < members.size(); ++r) {
      const std::size_t i = members[r];
      if (static_cast<Eigen::Index>(r) != k - 1)
        trip.emplace_back(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r), -1.0);
      for (const auto& e : mdp.row(global[i], policy[global[i]])) {
        const auto col = static_cast<Eigen::Index>(pos[local[e.next]]);
        if (col != k - 1) trip.emplace_back(col, static_cast<Eigen::Index>(r), e.probability);
      }
      trip.emplace_back(k - 1, static_cast<Eigen::Index>(r), 1.0);
    }
    detail::SparseMatrix a(k, k);
    a.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    b(k - 1) = 1.0;
    const Eigen::VectorXd pi = detail::sparse_solve(a, b);

    Eigen::VectorXd flow = Eigen::VectorXd::Zero(k);
    for (std::size_t r = 0; r < members.size(); ++r)
      for (const auto& e : mdp.row(global[members[r]], policy[global[members[r]]]))
        flow(static_cast<Eigen::Index>(pos[local[e.next]])) +=
            pi(static_cast<Eigen::Index>(r)) * e.probability;
    out.residual = std::max(out.residual, (flow - pi).cwiseAbs().maxCoeff());

    double cae = 0.0, cost = 0.0;
    for (std::size_t r = 0; r < members.size(); ++r) {
      cae += pi(static_cast<Eigen::Index>(r)) * stage_cae[members[r]];
      cost += pi(static_cast<Eigen::Index>(r)) * stage_cost[members[r]];
    }
    out.avg_cae += absorb[c] * cae;
    out.avg_cost += absorb[c] * cost;
  }
  return out;
}

enum class PolicyKind { deterministic, mixture };

// Output of the constrained solver. A mixture follows tables[0] with
// probability beta and tables[1] otherwise, chosen once per episode.
struct SolvedPolicy {
  PolicyKind kind = PolicyKind::deterministic;
  std::vector<PolicyTable> tables;
  double beta = 1.0;
  double multiplier = 0.0;                 // lambda, or gamma for a mixture
  std::array<double, 2> multipliers{};     // (gamma - xi, gamma + xi) for a mixture
  std::array<double, 2> table_cae{};
  std::array<double, 2> table_cost{};
  double avg_cae = 0.0;
  double avg_cost = 0.0;
  bool degenerate = false;  // mixture collapsed: both tables had equal cost
};

inline PolicyEvaluation evaluate_policy(const ProductMdp& mdp, const SolvedPolicy& policy) {
  if (policy.tables.empty()) throw std::invalid_argument("solved policy has no tables");
  if (policy.kind == PolicyKind::deterministic) return evaluate_policy(mdp, policy.tables[0]);
  if (policy.tables.size() != 2) throw std::invalid_argument("mixture needs two tables");
  const auto first = evaluate_policy(mdp, policy.tables[0]);
  const auto second = evaluate_policy(mdp, policy.tables[1]);
  PolicyEvaluation out;
  out.avg_cae = policy.beta * first.avg_cae + (1.0 - policy.beta) * second.avg_cae;
  out.avg_cost = policy.beta * first.avg_cost + (1.0 - policy.beta) * second.avg_cost;
  out.residual = std::max(first.residual, second.residual);
  out.recurrent_classes = std::max(first.recurrent_classes, second.recurrent_classes);
  return out;
}

struct BisectionOptions {
  double perturbation = 1e-3;  // xi
  double bisect_tol = 1e-6;    // stopping width on the multiplier
  RviOptions rvi{};
  double max_multiplier = 1e12;
};

namespace detail {

struct LambdaSolution {
  double multiplier;
  PolicyTable table;
  PolicyEvaluation eval;
};

inline LambdaSolution solve_at(const ProductMdp& mdp, double multiplier, const RviOptions& rvi) {
  auto r = relative_value_iteration(mdp, multiplier, rvi);
  auto e = evaluate_policy(mdp, r.policy);
  return {multiplier, std::move(r.policy), e};
}

inline SolvedPolicy deterministic(const LambdaSolution& s) {
  SolvedPolicy p;
  p.kind = PolicyKind::deterministic;
  p.tables = {s.table};
  p.beta = 1.0;
  p.multiplier = s.multiplier;
  p.multipliers = {s.multiplier, s.multiplier};
  p.table_cae = {s.eval.avg_cae, s.eval.avg_cae};
  p.table_cost = {s.eval.avg_cost, s.eval.avg_cost};
  p.avg_cae = s.eval.avg_cae;
  p.avg_cost = s.eval.avg_cost;
  return p;
}

}  // namespace detail

// Lagrangian relaxation of the constrained problem: bisection on the
// multiplier for gamma = inf{lambda : C(pi_lambda) <= C_max}, then the
// randomized mixture of the policies at gamma -/+ xi whose expected cost
// equals the budget.
inline SolvedPolicy bisection_solve(const ProductMdp& mdp, double cost_budget,
                                    const BisectionOptions& opt = {}) {
  if (!(cost_budget >= 0.0)) throw ConfigError("C_max must be >= 0");
  const auto& rvi = opt.rvi;
  const auto at_zero = detail::solve_at(mdp, 0.0, rvi);
  if (at_zero.eval.avg_cost <= cost_budget) return detail::deterministic(at_zero);

  auto lo = at_zero;
  auto hi = detail::solve_at(mdp, 1.0, rvi);
  while (hi.eval.avg_cost > cost_budget) {
    lo = std::move(hi);
    if (lo.multiplier * 2.0 > opt.max_multiplier)
      throw ConvergenceError("no multiplier meets the cost budget");
    hi = detail::solve_at(mdp, lo.multiplier * 2.0, rvi);
  }
  while (hi.multiplier - lo.multiplier > opt.bisect_tol) {
    auto mid = detail::solve_at(mdp, 0.5 * (lo.multiplier + hi.multiplier), rvi);
    if (mid.eval.avg_cost <= cost_budget) {
      hi = std::move(mid);
    } else {
      lo = std::move(mid);
    }
  }
  const double gamma = hi.multiplier;
  if (std::abs(hi.eval.avg_cost - cost_budget) <= 1e-12) {
    auto p = detail::deterministic(hi);
    p.multiplier = gamma;
    return p;
  }

  auto minus = detail::solve_at(mdp, std::max(0.0, gamma - opt.perturbation), rvi);
  auto plus = detail::solve_at(mdp, gamma + opt.perturbation, rvi);
  // xi larger than the gap to the next breakpoint: the perturbed policies no
  // longer bracket the budget, so fall back to the bisection endpoints.
  if (!(minus.eval.avg_cost > cost_budget)) minus = lo;
  if (!(plus.eval.avg_cost <= cost_budget)) plus = hi;

  const double c1 = minus.eval.avg_cost;
  const double c2 = plus.eval.avg_cost;
  if (!(std::abs(c1 - c2) > 1e-15)) {
    auto p = detail::deterministic(c1 <= c2 ? minus : plus);
    p.multiplier = gamma;
    p.degenerate = true;
    return p;
  }
  SolvedPolicy p;
  p.kind = PolicyKind::mixture;
  p.tables = {std::move(minus.table), std::move(plus.table)};
  p.beta = std::clamp((cost_budget - c2) / (c1 - c2), 0.0, 1.0);
  p.multiplier = gamma;
  p.multipliers = {minus.multiplier, plus.multiplier};
  p.table_cae = {minus.eval.avg_cae, plus.eval.avg_cae};
  p.table_cost = {c1, c2};
  p.avg_cae = p.beta * minus.eval.avg_cae + (1.0 - p.beta) * plus.eval.avg_cae;
  p.avg_cost = p.beta * c1 + (1.0 - p.beta) * c2;
  return p;
}

// Cost-free policy: the optimal policy when transmissions carry no penalty.
inline SolvedPolicy solve_cost_free(const ProductMdp& mdp, const RviOptions& rvi = {}) {
  return detail::deterministic(detail::solve_at(mdp, 0.0, rvi));
}

// Episode-start selection of a mixture component: table 0 w.p. beta.
// Deterministic policies consume no draw.
template <UniformSource Rng>
std::size_t select_table(const SolvedPolicy& policy, Rng& rng) {
  if (policy.kind == PolicyKind::deterministic) return 0;
  return rng.uniform() < policy.beta ? 0 : 1;
}

// Follows one deterministic table for a whole run.
class TablePolicy {
 public:
  TablePolicy(JointStateCodec codec, PolicyTable table)
      : codec_(std::move(codec)), table_(std::move(table)) {
    if (table_.size() != codec_.num_states())
      throw ConfigError("policy table size does not match the scenario's joint state space");
  }

  // Picks the component for this episode (one draw for a mixture).
  template <UniformSource Rng>
  static TablePolicy for_episode(const JointStateCodec& codec, const SolvedPolicy& policy, Rng& rng) {
    return TablePolicy(codec, policy.tables.at(select_table(policy, rng)));
  }

  template <typename Rng>
  Action decide(const SystemState& state, Rng&) const {
    return Action{table_[codec_.encode(state)]};
  }

  void observe(const StepOutcome&) {}

  const PolicyTable& table() const noexcept { return table_; }

 private:
  JointStateCodec codec_;
  PolicyTable table_;
};

}  // namespace goest
