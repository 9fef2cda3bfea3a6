#include <gtest/gtest.h>

#include "goest/baselines.hpp"

using namespace goest;

TEST(SourceAgnostic, SingleSourceProbabilities) {
  const std::vector<double> costs{1.0};
  const SourceAgnosticPolicy p(0.4, 0.0, costs);
  const auto probs = p.action_probabilities();
  ASSERT_EQ(probs.size(), 2u);
  EXPECT_NEAR(probs[0], 0.6, 1e-15);
  EXPECT_NEAR(probs[1], 0.4, 1e-15);
}

TEST(SourceAgnostic, FullSlackNeverSamples) {
  const std::vector<double> costs{1.0, 1.0};
  const SourceAgnosticPolicy p(0.5, 0.5, costs);
  RandomStream rng(1);
  for (int i = 0; i < 10'000; ++i) EXPECT_EQ(p.decide(rng), Action::idle());
}

TEST(SourceAgnostic, ThreeSourceFrequencies) {
  const std::vector<double> costs{1.0, 1.0, 1.0};
  const SourceAgnosticPolicy p(0.8, 0.0, costs);
  RandomStream rng(31);
  const int n = 1'000'000;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < n; ++i) ++counts[p.decide(rng).selected];
  for (int m = 1; m <= 3; ++m) EXPECT_NEAR(counts[m] / double(n), 0.8 / 3.0, 0.002);
  EXPECT_NEAR((n - counts[0]) / double(n), 0.8, 0.002);
}

TEST(SourceAgnostic, ExpectedCostIsBudgetMinusSlack) {
  const std::vector<double> costs{1.0, 2.0, 0.5};
  const SourceAgnosticPolicy p(0.6, 0.1, costs);
  const auto probs = p.action_probabilities();
  double expected = 0.0;
  for (std::size_t m = 0; m < costs.size(); ++m) expected += probs[m + 1] * costs[m];
  EXPECT_NEAR(expected, 0.5, 1e-15);
}

TEST(SourceAgnostic, RejectsInvalidParameters) {
  const std::vector<double> cheap{0.5};
  EXPECT_THROW(SourceAgnosticPolicy(0.8, 0.0, cheap), ConfigError);  // probability 1.6
  const std::vector<double> unit{1.0};
  EXPECT_THROW(SourceAgnosticPolicy(0.4, 0.5, unit), ConfigError);
  EXPECT_THROW(SourceAgnosticPolicy(0.4, -0.1, unit), ConfigError);
  RandomStream rng(1);
  EXPECT_THROW(source_agnostic_decide(2, 0.4, 0.0, unit, rng), ConfigError);
}

TEST(SourceAgnostic, IgnoresState) {
  const std::vector<double> costs{1.0, 1.0};
  const SourceAgnosticPolicy p(0.8, 0.0, costs);
  RandomStream a(9), b(9);
  const SystemState s1 = SystemState::initial(2);
  const SystemState s2{{{1, 0}, {0, 1}}};
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(p.decide(s1, a), p.decide(s2, b));
}
