#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "random.hpp"

namespace goest {

// 0-based state index. Configs and reports use 1-based indices; the
// conversion happens at the I/O boundary only.
using StateIndex = std::size_t;

inline constexpr double kRowSumTolerance = 1e-9;

// Dense row-major square matrix.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  SquareMatrix(std::initializer_list<std::initializer_list<double>> rows) : n_(rows.size()) {
    data_.reserve(n_ * n_);
    for (const auto& r : rows) {
      if (r.size() != n_) throw ConfigError("matrix is not square");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static SquareMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    SquareMatrix m(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) {
        std::ostringstream os;
        os << "matrix is not square: row " << i + 1 << " has " << rows[i].size()
           << " entries, expected " << rows.size();
        throw ConfigError(os.str());
      }
      for (std::size_t j = 0; j < rows.size(); ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  static SquareMatrix identity(std::size_t n) {
    SquareMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t size() const noexcept { return n_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }

  std::vector<std::vector<double>> to_rows() const {
    std::vector<std::vector<double>> out(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i].assign(row(i).begin(), row(i).end());
    return out;
  }

  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

// One discrete-time Markov source together with its actuation-error costs.
//   transition(i, k): P(next = k | current = i)
//   cae(k, j):        cost when the true state is k and the estimate is j
struct MarkovSource {
  std::string name;
  SquareMatrix transition;
  SquareMatrix cae;
  double weight = 1.0;
  double sampling_cost = 1.0;

  std::size_t num_states() const noexcept { return transition.size(); }

  friend bool operator==(const MarkovSource&, const MarkovSource&) = default;
};

namespace detail {

inline std::string source_label(const MarkovSource& s) {
  return s.name.empty() ? std::string("source") : "source '" + s.name + "'";
}

}  // namespace detail

// Throws ConfigError describing the first violated invariant (1-based indices).
inline void validate(const MarkovSource& source) {
  const auto label = detail::source_label(source);
  const std::size_t n = source.num_states();
  auto fail = [&](const std::string& what) { throw ConfigError(label + ": " + what); };

  if (n == 0) fail("must have at least one state");
  if (source.cae.size() != n) {
    std::ostringstream os;
    os << "CAE matrix is " << source.cae.size() << "x" << source.cae.size()
       << " but the transition matrix is " << n << "x" << n;
    fail(os.str());
  }
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double p = source.transition(i, k);
      if (!(p >= 0.0 && p <= 1.0)) {
        std::ostringstream os;
        os << "transition entry (" << i + 1 << "," << k + 1 << ") = " << p << " is outside [0,1]";
        fail(os.str());
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      std::ostringstream os;
      os.precision(12);
      os << "transition row " << i + 1 << " sums to " << sum << ", not 1";
      fail(os.str());
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      const double c = source.cae(k, j);
      if (!std::isfinite(c) || c < 0.0) {
        std::ostringstream os;
        os << "CAE entry (" << k + 1 << "," << j + 1 << ") = " << c << " must be finite and >= 0";
        fail(os.str());
      }
    }
    if (source.cae(k, k) != 0.0) {
      std::ostringstream os;
      os << "CAE diagonal entry (" << k + 1 << "," << k + 1 << ") = " << source.cae(k, k)
         << " must be 0";
      fail(os.str());
    }
  }
  if (!(source.weight > 0.0) || !std::isfinite(source.weight)) fail("weight must be > 0");
  if (!(source.sampling_cost > 0.0) || !std::isfinite(source.sampling_cost))
    fail("sampling cost must be > 0");
}

// Validates, then rescales rows whose sum is off by more than rounding noise
// (but within kRowSumTolerance). Larger deviations are reported, not repaired.
inline MarkovSource make_source(std::string name, SquareMatrix transition, SquareMatrix cae,
                                double weight = 1.0, double sampling_cost = 1.0) {
  MarkovSource s{std::move(name), std::move(transition), std::move(cae), weight, sampling_cost};
  validate(s);
  for (std::size_t i = 0; i < s.num_states(); ++i) {
    const auto r = s.transition.row(i);
    const double sum = std::accumulate(r.begin(), r.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-12) {
      for (std::size_t k = 0; k < s.num_states(); ++k) s.transition(i, k) /= sum;
    }
  }
  return s;
}

// Two-state chain [1-p, p; q, 1-q].
inline SquareMatrix two_state_transition(double p, double q) {
  return SquareMatrix{{1.0 - p, p}, {q, 1.0 - q}};
}

inline void check_state_index(const MarkovSource& source, StateIndex s) {
  if (s >= source.num_states()) {
    std::ostringstream os;
    os << detail::source_label(source) << ": state " << s + 1 << " is outside 1.."
       << source.num_states();
    throw std::out_of_range(os.str());
  }
}

// Draws the next state by inverting the row CDF with exactly one uniform draw.
template <UniformSource Rng>
StateIndex sample_next(const MarkovSource& source, StateIndex current, Rng& rng) {
  check_state_index(source, current);
  const double u = rng.uniform();
  const auto row = source.transition.row(current);
  double cumulative = 0.0;
  StateIndex last_positive = current;
  for (StateIndex k = 0; k < row.size(); ++k) {
    if (row[k] <= 0.0) continue;
    cumulative += row[k];
    last_positive = k;
    if (u < cumulative) return k;
  }
  // u fell into the rounding gap above the final cumulative sum.
  return last_positive;
}

namespace detail {

inline std::vector<bool> reachable_from(const SquareMatrix& p, StateIndex start, bool reverse) {
  const std::size_t n = p.size();
  std::vector<bool> seen(n, false);
  std::vector<StateIndex> stack{start};
  seen[start] = true;
  while (!stack.empty()) {
    const StateIndex s = stack.back();
    stack.pop_back();
    for (StateIndex k = 0; k < n; ++k) {
      const double w = reverse ? p(k, s) : p(s, k);
      if (w > 0.0 && !seen[k]) {
        seen[k] = true;
        stack.push_back(k);
      }
    }
  }
  return seen;
}

inline std::string format_states(const std::vector<bool>& mask, bool value) {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] != value) continue;
    os << (first ? "" : ",") << i + 1;
    first = false;
  }
  os << "}";
  return os.str();
}

}  // namespace detail

// Stationary law of an irreducible chain. Irreducibility is checked on the
// support graph; a reducible chain is reported with the offending states.
inline std::vector<double> stationary_distribution(const MarkovSource& source) {
  const std::size_t n = source.num_states();
  if (n == 0) throw ConfigError("empty chain has no stationary distribution");
  const auto fwd = detail::reachable_from(source.transition, 0, false);
  const auto bwd = detail::reachable_from(source.transition, 0, true);
  for (std::size_t i = 0; i < n; ++i) {
    if (!fwd[i]) {
      throw ConfigError(detail::source_label(source) + ": chain is reducible; states " +
                        detail::format_states(fwd, false) + " are unreachable from state 1");
    }
    if (!bwd[i]) {
      throw ConfigError(detail::source_label(source) + ": chain is reducible; state 1 is unreachable from states " +
                        detail::format_states(bwd, false));
    }
  }

  // pi (P - I) = 0 with the last balance equation replaced by sum(pi) = 1.
  Eigen::MatrixXd a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
          source.transition(i, k) - (i == k ? 1.0 : 0.0);
  a.row(static_cast<Eigen::Index>(n - 1)).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  b(static_cast<Eigen::Index>(n - 1)) = 1.0;
  Eigen::VectorXd pi = a.fullPivLu().solve(b);

  std::vector<double> out(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::max(0.0, pi(static_cast<Eigen::Index>(i)));
    total += out[i];
  }
  for (auto& x : out) x /= total;
  return out;
}

}  // namespace goest
