#include <gtest/gtest.h>

#include <array>
#include <random>

#include "goest/harness.hpp"
#include "goest/sources.hpp"
#include "oracles.hpp"

using namespace goest;
using goest::testing::CountingStream;
using goest::testing::ScriptedStream;

namespace {

MarkovSource with_transition(SquareMatrix p) {
  MarkovSource s;
  s.name = "t";
  s.cae = SquareMatrix(p.size());
  s.transition = std::move(p);
  return s;
}

std::string error_of(const MarkovSource& s) {
  try {
    validate(s);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Validate, AcceptsEvaluationSources) {
  EXPECT_NO_THROW(validate(source_s1()));
  EXPECT_NO_THROW(validate(source_s2()));
  EXPECT_NO_THROW(validate(source_s3()));
}

TEST(Validate, AcceptsIdentityWithZeroCae) {
  EXPECT_NO_THROW(validate(with_transition(SquareMatrix::identity(4))));
}

TEST(Validate, RejectsRowNotSummingToOne) {
  auto s = with_transition(SquareMatrix::identity(4));
  s.transition(0, 0) = 0.5;
  s.transition(0, 1) = 0.4;
  const auto msg = error_of(s);
  EXPECT_NE(msg.find("row 1 sums to 0.9"), std::string::npos) << msg;
}

TEST(Validate, ReportsTheFirstBadRow) {
  auto s = source_s1();
  s.transition(1, 1) = 0.77;
  const auto msg = error_of(s);
  EXPECT_NE(msg.find("row 2 sums to 0.97"), std::string::npos) << msg;
}

TEST(Validate, RejectsEntriesOutsideUnitInterval) {
  auto s = with_transition(SquareMatrix{{1.2, -0.2}, {0.0, 1.0}});
  EXPECT_NE(error_of(s).find("(1,1)"), std::string::npos);
}

TEST(Validate, RejectsNonzeroCaeDiagonal) {
  auto s = source_s1();
  s.cae(2, 2) = 1.0;
  EXPECT_NE(error_of(s).find("diagonal entry (3,3)"), std::string::npos);
}

TEST(Validate, RejectsNegativeOrNonFiniteCae) {
  auto s = source_s1();
  s.cae(0, 1) = -1.0;
  EXPECT_NE(error_of(s).find("(1,2)"), std::string::npos);
  s.cae(0, 1) = std::numeric_limits<double>::infinity();
  EXPECT_NE(error_of(s).find("(1,2)"), std::string::npos);
}

TEST(Validate, AcceptsAsymmetricCae) {
  // Non-commutative costs are the norm; S1's CAE is not symmetric.
  const auto s = source_s1();
  EXPECT_NE(s.cae(0, 2), s.cae(2, 0));
  EXPECT_NO_THROW(validate(s));
}

TEST(Validate, RejectsShapeMismatchAndBadScalars) {
  auto s = source_s1();
  s.cae = SquareMatrix(3);
  EXPECT_FALSE(error_of(s).empty());
  s = source_s1();
  s.weight = 0.0;
  EXPECT_NE(error_of(s).find("weight"), std::string::npos);
  s = source_s1();
  s.sampling_cost = -1.0;
  EXPECT_NE(error_of(s).find("sampling cost"), std::string::npos);
}

TEST(MakeSource, RenormalizesRowsWithinTolerance) {
  const auto s = make_source("x", SquareMatrix{{0.5 + 4e-10, 0.5}, {0.3, 0.7}}, SquareMatrix(2));
  EXPECT_NEAR(s.transition(0, 0) + s.transition(0, 1), 1.0, 1e-15);
}

TEST(MakeSource, RejectsRowsOutsideTolerance) {
  EXPECT_THROW(make_source("x", SquareMatrix{{0.5 + 1e-8, 0.5}, {0.3, 0.7}}, SquareMatrix(2)),
               ConfigError);
}

TEST(SampleNext, FirstRowOfS1OnlyReachesStatesOneAndTwo) {
  const auto s1 = source_s1();
  RandomStream rng(3);
  for (int i = 0; i < 10'000; ++i) {
    const auto k = sample_next(s1, 0, rng);
    EXPECT_TRUE(k == 0 || k == 1);
  }
}

TEST(SampleNext, ForcedTransition) {
  const auto s = with_transition(SquareMatrix{{0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}});
  for (double u : {0.0, 0.3, 0.999999}) {
    ScriptedStream rng({u});
    EXPECT_EQ(sample_next(s, 0, rng), 1u);
  }
}

TEST(SampleNext, ConsumesExactlyOneDraw) {
  const auto s1 = source_s1();
  CountingStream rng(1);
  for (StateIndex i = 0; i < 4; ++i) sample_next(s1, i, rng);
  EXPECT_EQ(rng.draws(), 4u);
}

TEST(SampleNext, OutOfRangeStateThrows) {
  RandomStream rng(1);
  EXPECT_THROW(sample_next(source_s1(), 4, rng), std::out_of_range);
}

TEST(SampleNext, EmpiricalFrequencyMatchesMatrixEntry) {
  const auto s1 = source_s1();
  RandomStream rng(2024);
  const int n = 1'000'000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += sample_next(s1, 0, rng) == 1;
  EXPECT_NEAR(static_cast<double>(hits) / n, 0.2, 0.004);
}

TEST(SampleNext, ChiSquareAgainstEveryRowOfS1) {
  // Critical values of chi^2 at significance 0.01 for 1 and 2 degrees of freedom.
  const std::array<double, 3> critical{0.0, 6.635, 9.210};
  const auto s1 = source_s1();
  RandomStream rng(77);
  const int n = 1'000'000;
  for (StateIndex i = 0; i < 4; ++i) {
    std::vector<int> counts(4, 0);
    for (int t = 0; t < n; ++t) ++counts[sample_next(s1, i, rng)];
    double chi2 = 0.0;
    int support = 0;
    for (StateIndex k = 0; k < 4; ++k) {
      const double expected = n * s1.transition(i, k);
      if (expected == 0.0) {
        EXPECT_EQ(counts[k], 0);
        continue;
      }
      ++support;
      chi2 += (counts[k] - expected) * (counts[k] - expected) / expected;
    }
    EXPECT_LT(chi2, critical[support - 1]) << "row " << i + 1;
  }
}

TEST(Stationary, TwoStateClosedForm) {
  const double p = 0.1, q = 0.15;
  const auto pi = stationary_distribution(two_state_source("x", p, q));
  EXPECT_NEAR(pi[0], q / (p + q), 1e-12);
  EXPECT_NEAR(pi[1], p / (p + q), 1e-12);
  EXPECT_NEAR(pi[0], 0.6, 1e-12);
}

TEST(Stationary, IdentityIsReducible) {
  try {
    stationary_distribution(with_transition(SquareMatrix::identity(3)));
    FAIL() << "expected a reducibility error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("reducible"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("{2,3}"), std::string::npos) << e.what();
  }
}

TEST(Stationary, AbsorbingStateReported) {
  // State 2 is absorbing: reachable from 1 but 1 is not reachable back.
  const auto s = with_transition(SquareMatrix{{0.5, 0.5}, {0.0, 1.0}});
  EXPECT_THROW(stationary_distribution(s), ConfigError);
}

TEST(Stationary, SymmetricDoublyStochasticIsUniform) {
  const auto s = with_transition(SquareMatrix{{0.4, 0.3, 0.2, 0.1},
                                              {0.3, 0.4, 0.1, 0.2},
                                              {0.2, 0.1, 0.4, 0.3},
                                              {0.1, 0.2, 0.3, 0.4}});
  for (double x : stationary_distribution(s)) EXPECT_NEAR(x, 0.25, 1e-12);
}

TEST(Stationary, ResidualOnRandomIrreducibleChains) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + gen() % 9;
    SquareMatrix p(n);
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        // Sparse rows, but the cycle i -> i+1 keeps the chain irreducible.
        p(i, k) = (k == (i + 1) % n || unit(gen) < 0.3) ? unit(gen) + 0.01 : 0.0;
        sum += p(i, k);
      }
      for (std::size_t k = 0; k < n; ++k) p(i, k) /= sum;
    }
    const auto s = make_source("r", p, SquareMatrix(n));
    const auto pi = stationary_distribution(s);
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      double flow = 0.0;
      for (std::size_t i = 0; i < n; ++i) flow += pi[i] * s.transition(i, k);
      EXPECT_NEAR(flow, pi[k], 1e-10);
      EXPECT_GE(pi[k], 0.0);
      total += pi[k];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}
