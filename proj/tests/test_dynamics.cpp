#include <gtest/gtest.h>

#include <map>
#include <random>

#include "goest/dpp.hpp"
#include "goest/dynamics.hpp"
#include "goest/harness.hpp"
#include "oracles.hpp"

using namespace goest;
using goest::testing::CountingStream;
using goest::testing::MeanSe;
using goest::testing::ScriptedStream;

namespace {

SystemState single(StateIndex truth, StateIndex estimate) {
  return SystemState{{SubState{truth, estimate}}};
}

double kernel_probability(const std::vector<SubTransition>& k, SubState next) {
  for (const auto& t : k)
    if (t.next == next) return t.probability;
  return 0.0;
}

}  // namespace

TEST(Step, DeliveredUpdateCarriesPreTransitionState) {
  const std::vector<MarkovSource> sources{source_s1()};
  // Channel draw 0.0 succeeds; source draw 0.9 lands on state 2 of row [0.8, 0.2, 0, 0].
  ScriptedStream rng({0.0, 0.9});
  const auto out = step(single(0, 2), Action{1}, sources, Channel{0.6}, rng);
  EXPECT_EQ(out.next_state, single(1, 0));
  EXPECT_TRUE(out.channel_ok);
  EXPECT_DOUBLE_EQ(out.cae, 10.0);
  EXPECT_DOUBLE_EQ(out.cost, 1.0);
  EXPECT_EQ(rng.draws(), 2u);
}

TEST(Step, FailedUpdateKeepsEstimate) {
  const std::vector<MarkovSource> sources{source_s1()};
  ScriptedStream rng({0.7, 0.1});
  const auto out = step(single(0, 2), Action{1}, sources, Channel{0.6}, rng);
  EXPECT_FALSE(out.channel_ok);
  EXPECT_EQ(out.next_state, single(0, 2));
  EXPECT_DOUBLE_EQ(out.cae, 50.0);
  EXPECT_DOUBLE_EQ(out.cost, 1.0);
}

TEST(Step, IdleLeavesEstimatesAndCostsNothing) {
  const std::vector<MarkovSource> sources{source_s1(), source_s2(), source_s3()};
  CountingStream rng(11);
  SystemState s{{{0, 3}, {1, 0}, {0, 1}}};
  for (int t = 0; t < 1000; ++t) {
    const auto out = step(s, Action::idle(), sources, Channel{1.0}, rng);
    EXPECT_EQ(out.cost, 0.0);
    for (std::size_t m = 0; m < 3; ++m)
      EXPECT_EQ(out.next_state.pairs[m].estimate, s.pairs[m].estimate);
    s = out.next_state;
  }
  // No channel draws when idle: one draw per source per slot.
  EXPECT_EQ(rng.draws(), 3000u);
}

TEST(Step, ChannelDrawOnlyWhenSampling) {
  const std::vector<MarkovSource> sources{source_s1(), source_s2()};
  CountingStream rng(1);
  const SystemState s = SystemState::initial(2);
  step(s, Action{2}, sources, Channel{0.5}, rng);
  EXPECT_EQ(rng.draws(), 3u);
  step(s, Action::idle(), sources, Channel{0.5}, rng);
  EXPECT_EQ(rng.draws(), 5u);
}

TEST(Step, RejectsBadInputs) {
  const std::vector<MarkovSource> sources{source_s1()};
  RandomStream rng(1);
  EXPECT_THROW(step(single(0, 0), Action{2}, sources, Channel{1.0}, rng), std::out_of_range);
  EXPECT_THROW(step(single(4, 0), Action{0}, sources, Channel{1.0}, rng), std::out_of_range);
  EXPECT_THROW(step(SystemState::initial(2), Action{0}, sources, Channel{1.0}, rng),
               std::invalid_argument);
}

TEST(Step, UnselectedEstimatesNeverChangeAndCaeIsReconstructible) {
  const std::vector<MarkovSource> sources{source_s1(), source_s2(), source_s3()};
  RandomStream rng(8);
  std::mt19937_64 pick(8);
  SystemState s = SystemState::initial(3);
  for (int t = 0; t < 20'000; ++t) {
    const Action a{pick() % 4};
    const auto out = step(s, a, sources, Channel{0.7}, rng);
    for (std::size_t m = 0; m < 3; ++m) {
      if (a.is_idle() || a.source() != m) {
        EXPECT_EQ(out.next_state.pairs[m].estimate, s.pairs[m].estimate);
      } else if (out.channel_ok) {
        EXPECT_EQ(out.next_state.pairs[m].estimate, s.pairs[m].truth);
      }
    }
    double cae = 0.0;
    for (std::size_t m = 0; m < 3; ++m)
      cae += sources[m].weight *
             sources[m].cae(out.next_state.pairs[m].truth, out.next_state.pairs[m].estimate);
    EXPECT_DOUBLE_EQ(out.cae, cae);
    EXPECT_EQ(out.cost, a.is_idle() ? 0.0 : 1.0);
    s = out.next_state;
  }
}

TEST(Step, CorrectEstimateMakesSamplingIrrelevantInExpectation) {
  const std::vector<MarkovSource> sources{source_s1()};
  for (StateIndex i = 0; i < 4; ++i) {
    MeanSe idle, sampled;
    RandomStream r0(100 + i), r1(200 + i);
    for (int t = 0; t < 100'000; ++t) {
      idle.add(step(single(i, i), Action{0}, sources, Channel{0.3}, r0).cae);
      sampled.add(step(single(i, i), Action{1}, sources, Channel{0.3}, r1).cae);
    }
    const double se = std::hypot(idle.se(), sampled.se());
    EXPECT_LE(std::abs(idle.mean() - sampled.mean()), 3.0 * se) << "state " << i + 1;
  }
}

TEST(SubKernel, EqualTruthAndEstimateMergeBranches) {
  const auto k = sub_kernel(source_s1(), {0, 0}, true, Channel{0.6});
  ASSERT_EQ(k.size(), 2u);
  EXPECT_NEAR(kernel_probability(k, {1, 0}), 0.2, 1e-15);
  EXPECT_NEAR(kernel_probability(k, {0, 0}), 0.8, 1e-15);
}

TEST(SubKernel, PerfectChannelCollapsesFailureBranch) {
  const auto k = sub_kernel(source_s1(), {0, 2}, true, Channel{1.0});
  const std::vector<SubTransition> expected{{{0, 0}, 0.8}, {{1, 0}, 0.2}};
  EXPECT_EQ(k, expected);
}

TEST(SubKernel, LossyChannelHasBothBranches) {
  const auto k = sub_kernel(source_s1(), {0, 2}, true, Channel{0.6});
  ASSERT_EQ(k.size(), 4u);
  EXPECT_NEAR(kernel_probability(k, {1, 0}), 0.2 * 0.6, 1e-15);
  EXPECT_NEAR(kernel_probability(k, {1, 2}), 0.2 * 0.4, 1e-15);
  EXPECT_NEAR(kernel_probability(k, {0, 0}), 0.8 * 0.6, 1e-15);
  EXPECT_NEAR(kernel_probability(k, {0, 2}), 0.8 * 0.4, 1e-15);
}

TEST(SubKernel, NotSampledKeepsEstimate) {
  for (const auto& src : {source_s1(), source_s2(), source_s3()})
    for (StateIndex i = 0; i < src.num_states(); ++i)
      for (StateIndex j = 0; j < src.num_states(); ++j)
        for (const auto& t : sub_kernel(src, {i, j}, false, Channel{0.5}))
          EXPECT_EQ(t.next.estimate, j);
}

TEST(SubKernel, RowsAreDistributions) {
  for (const auto& src : {source_s1(), source_s2(), source_s3()})
    for (double ps : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0})
      for (StateIndex i = 0; i < src.num_states(); ++i)
        for (StateIndex j = 0; j < src.num_states(); ++j)
          for (bool sampled : {false, true}) {
            double total = 0.0;
            for (const auto& t : sub_kernel(src, {i, j}, sampled, Channel{ps})) {
              EXPECT_GT(t.probability, 0.0);
              EXPECT_LE(t.probability, 1.0);
              total += t.probability;
            }
            EXPECT_NEAR(total, 1.0, 1e-12);
          }
}

TEST(SubKernel, OutOfRangeThrows) {
  EXPECT_THROW(sub_kernel(source_s2(), {0, 2}, true, Channel{1.0}), std::out_of_range);
}

TEST(SubKernel, MatchesMonteCarloOverStep) {
  const std::vector<MarkovSource> sources{source_s1()};
  const Channel channel{0.6};
  const int n = 1'000'000;
  RandomStream rng(4242);
  for (StateIndex i = 0; i < 4; ++i)
    for (StateIndex j = 0; j < 4; ++j)
      for (std::size_t a = 0; a < 2; ++a) {
        std::map<std::pair<StateIndex, StateIndex>, int> counts;
        for (int t = 0; t < n; ++t) {
          const auto out = step(single(i, j), Action{a}, sources, channel, rng);
          ++counts[{out.next_state.pairs[0].truth, out.next_state.pairs[0].estimate}];
        }
        const auto kernel = sub_kernel(sources[0], {i, j}, a == 1, channel);
        int covered = 0;
        for (const auto& t : kernel) {
          const double freq = counts[{t.next.truth, t.next.estimate}] / static_cast<double>(n);
          const double se = std::sqrt(t.probability * (1.0 - t.probability) / n);
          EXPECT_LE(std::abs(freq - t.probability), 3.0 * se + 1e-12)
              << "sub-state (" << i + 1 << "," << j + 1 << ") action " << a << " next ("
              << t.next.truth + 1 << "," << t.next.estimate + 1 << ")";
          covered += counts[{t.next.truth, t.next.estimate}];
        }
        EXPECT_EQ(covered, n) << "simulated an outcome outside the kernel support";
      }
}
