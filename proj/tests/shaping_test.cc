#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "storl/errors.h"
#include "storl/harness.h"
#include "storl/shaping.h"

namespace storl {
namespace {

constexpr double kTol = 1e-9;

TEST(Potential, Examples) {
  EXPECT_EQ(Potential(0, 3, 100), 0.0);
  EXPECT_NEAR(Potential(50, 2, 100), -0.25, 1e-15);
  EXPECT_NEAR(Potential(99, 4, 100), -0.2475, 1e-15);
  EXPECT_THROW(Potential(1, 0, 100), PreconditionError);
}

TEST(ShapedReward, Examples) {
  const ShapingParams p(0.99, 100);
  EXPECT_NEAR(ShapedReward(0.0, 10, 1, 2, p), 0.04555, 1e-12);
  EXPECT_NEAR(ShapedReward(0.0, 10, 1, 1, p), -0.0089, 1e-12);
  EXPECT_NEAR(ShapedReward(1.0, 12, 4, 4, p), 0.997825, 1e-12);
}

TEST(ShapingParams, BoundaryFlag) {
  EXPECT_TRUE(ShapingParams(0.99, 100).BoundaryWarning());
  EXPECT_FALSE(ShapingParams(0.999, 100).BoundaryWarning());
  EXPECT_THROW(ShapingParams(1.0, 100), ConfigError);
  EXPECT_THROW(ShapingParams(0.5, 0), ConfigError);
}

TEST(Progress, Definition) {
  EXPECT_TRUE(IsPositiveProgress(1, 2));
  EXPECT_FALSE(IsPositiveProgress(2, 2));
  EXPECT_FALSE(IsPositiveProgress(3, 1));
}

TEST(Theorem1, Example) {
  EXPECT_NEAR(CheckTheorem1(5, 1, 2, 1, ShapingParams(0.99, 100)), 0.0297, 1e-12);
  EXPECT_THROW(CheckTheorem1(5, 1, 1, 1, ShapingParams(0.99, 100)), PreconditionError);
}

TEST(Theorem1, MatchesTwoCallDifference) {
  const ShapingParams p(0.999, 100);
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const int K = std::uniform_int_distribution<int>(2, 30)(rng);
    const int k = std::uniform_int_distribution<int>(1, K - 1)(rng);
    const int kc = std::uniform_int_distribution<int>(k + 1, K)(rng);
    const int kn = std::uniform_int_distribution<int>(1, k)(rng);
    const int t = std::uniform_int_distribution<int>(0, 99)(rng);
    const double direct = ShapedReward(0, t, k, kc, p) - ShapedReward(0, t, k, kn, p);
    EXPECT_NEAR(CheckTheorem1(t, k, kc, kn, p), direct, 1e-12);
  }
}

TEST(Theorem2, Examples) {
  EXPECT_NEAR(CheckTheorem2(10, 2, 2, ShapingParams(0.995, 100)), -0.004725, 1e-12);
  EXPECT_NEAR(CheckTheorem2(99, 1, 1, ShapingParams(0.99, 100)), 0.0, 1e-12);
}

// Per-step summation, written independently of the library.
double SumReturn(const std::vector<double>& rewards, double gamma) {
  double g = 1.0, total = 0.0;
  for (double r : rewards) {
    total += g * r;
    g *= gamma;
  }
  return total;
}

TEST(Return, EmptyIsZero) {
  EXPECT_EQ(TrajectoryReturn({}, ShapingParams(0.99, 100), true), 0.0);
}

TEST(Return, CliffWalkingPath) {
  // 13 steps, K = 4, progress 1,1,..,2,..,3,..,4 at the end.
  const ShapingParams p(0.99, 100);
  std::vector<int> ks{1, 1, 1, 2, 2, 2, 2, 2, 2, 3, 3, 3, 3, 4};
  const auto traj = FromProgressSequence(ks, p);
  ASSERT_EQ(traj.size(), 13u);
  std::vector<double> shaped;
  for (size_t t = 0; t < traj.size(); ++t) {
    const double r = t + 1 == traj.size() ? 1.0 : 0.0;
    shaped.push_back(r + p.gamma * (-(t + 1.0) / 100.0 / ks[t + 1]) - (-(t / 100.0) / ks[t]));
  }
  const double expected = std::pow(0.99, 12) + std::pow(0.99, 13) * (-13.0 / 400.0);
  EXPECT_NEAR(SumReturn(shaped, 0.99), expected, 1e-9);
  EXPECT_NEAR(TrajectoryReturn(traj, p, true), expected, 1e-9);
  EXPECT_NEAR(expected, 0.857866, 1e-6);
}

TEST(Telescoping, RandomTrajectories) {
  const ShapingParams p(0.99, 100);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const int len = std::uniform_int_distribution<int>(1, 100)(rng);
    std::vector<int> ks;
    for (int t = 0; t <= len; ++t) ks.push_back(std::uniform_int_distribution<int>(1, 6)(rng));
    const auto traj = FromProgressSequence(ks, p);
    std::vector<double> base, shaped;
    for (const auto& st : traj) {
      base.push_back(st.base.reward);
      shaped.push_back(st.shaped_reward);
    }
    const double lhs = SumReturn(shaped, p.gamma) - SumReturn(base, p.gamma);
    const double rhs = std::pow(p.gamma, len) * (-(len / 100.0) / ks.back()) - 0.0;
    EXPECT_NEAR(lhs, rhs, kTol);
    EXPECT_NEAR(TelescopedShapingTerm(traj, p), rhs, kTol);
  }
}

TEST(Lemma1, SameLengthSameReturn) {
  const ShapingParams p(0.999, 100);
  const auto a = FromProgressSequence({1, 2, 2, 2, 3, 3, 4}, p);
  const auto b = FromProgressSequence({1, 1, 1, 2, 3, 4, 4}, p);
  EXPECT_NEAR(TrajectoryReturn(a, p, true), TrajectoryReturn(b, p, true), kTol);
}

TEST(Theorem3, ShorterWins) {
  const ShapingParams p(0.999, 100);
  std::vector<int> s{1}, l{1};
  for (int t = 1; t <= 13; ++t) s.push_back(1 + (3 * t) / 13);
  for (int t = 1; t <= 20; ++t) l.push_back(1 + (3 * t) / 20);
  const auto short_traj = FromProgressSequence(s, p);
  const auto long_traj = FromProgressSequence(l, p);
  const auto [rs, rl] = CheckTheorem3(short_traj, long_traj, 4, p);
  EXPECT_GT(rs, rl);
  EXPECT_THROW(CheckTheorem3(short_traj, short_traj, 4, p), PreconditionError);
  auto broken = FromProgressSequence({1, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 4}, p);
  EXPECT_THROW(CheckTheorem3(short_traj, broken, 4, p), PreconditionError);
}

TEST(Successful, Conventions) {
  const ShapingParams p(0.999, 100);
  EXPECT_EQ(CheckSuccessful(FromProgressSequence({1, 2, 3}, p), 3), SuccessConvention::kPostGoalState);
  EXPECT_EQ(CheckSuccessful(FromProgressSequence({1, 2, 3, 3}, p), 3), SuccessConvention::kPostGoalState);
  EXPECT_EQ(CheckSuccessful(FromProgressSequence({1, 2, 3, 1}, p), 3), SuccessConvention::kLastState);
  EXPECT_EQ(CheckSuccessful(FromProgressSequence({1, 3, 3}, p), 3), SuccessConvention::kNone);
  EXPECT_EQ(CheckSuccessful(FromProgressSequence({2, 3}, p), 3), SuccessConvention::kNone);
}

Dataset SmallDataset(const Environment& env, double p, int n, std::uint64_t seed) {
  const auto expert = MakeExpert(env);
  const RandomPolicy random(env.discrete());
  GenerationConfig gen;
  gen.expert_prob = p;
  gen.episodes = n;
  gen.seed = seed;
  return GenerateDataset(env, *expert, random, gen);
}

TEST(Augment, PreservesStructure) {
  const Environment env = Environment::Make(TaskId::kCliffWalking);
  const Dataset ds = SmallDataset(env, 0.5, 50, 3);
  const auto sched = ValidateSchedule(ParseResponse(FixtureResponse("cliffwalking")), env.cell_map()).repaired;
  const ShapingParams p(0.99, 100);
  const ShapedDataset shaped = AugmentDataset(ds, sched, env, p);
  ASSERT_EQ(shaped.trajectories.size(), ds.trajectories.size());
  for (size_t i = 0; i < ds.trajectories.size(); ++i) {
    const auto& src = ds.trajectories[i].steps;
    const auto& dst = shaped.trajectories[i];
    ASSERT_EQ(src.size(), dst.size());
    for (size_t t = 0; t < src.size(); ++t) {
      EXPECT_EQ(dst[t].base.state, src[t].state);
      EXPECT_EQ(dst[t].base.action, src[t].action);
      EXPECT_EQ(dst[t].base.next_state, src[t].next_state);
      const int k = ProgressIndex(sched, env, src[t].state);
      const int kn = src[t].reached_goal ? sched.K() : ProgressIndex(sched, env, src[t].next_state);
      EXPECT_EQ(dst[t].k, k);
      EXPECT_EQ(dst[t].k_next, kn);
      EXPECT_NEAR(dst[t].shaped_reward,
                  src[t].reward + 0.99 * (-(src[t].t + 1.0) / 100.0 / kn) + (src[t].t / 100.0) / k, 1e-15);
    }
  }
  const Dataset out = shaped.ToDataset();
  ASSERT_TRUE(out.shaping.has_value());
  EXPECT_EQ(out.shaping->gamma, 0.99);
  EXPECT_EQ(out.shaping->horizon, 100);
  EXPECT_EQ(DeserializeDataset(SerializeDataset(out)).shaping, out.shaping);
}

TEST(Augment, SingleGoalStep) {
  const Environment env = Environment::Make(TaskId::kCliffWalking);
  Dataset ds;
  ds.task = TaskId::kCliffWalking;
  Trajectory tr;
  tr.steps.push_back({Cell{2, 11}, Move::kDown, Cell{3, 11}, 1.0, 12, true, true});
  tr.success = true;
  ds.trajectories.push_back(tr);
  const auto sched = ValidateSchedule(ParseResponse(FixtureResponse("cliffwalking")), env.cell_map()).repaired;
  // (2,11) sits in subgoal 3, so this is 3 -> 4 at t = 12.
  const auto shaped = AugmentDataset(ds, sched, env, ShapingParams(0.99, 100));
  EXPECT_NEAR(shaped.trajectories[0][0].shaped_reward, 1.0 - 0.99 * 13.0 / 400.0 + 12.0 / 300.0, 1e-12);
}

TEST(Augment, WallStateThrows) {
  const Environment env = Environment::Make(TaskId::kFourRoom);
  Dataset ds;
  ds.task = TaskId::kFourRoom;
  Trajectory tr;
  tr.steps.push_back({Cell{5, 0}, Move::kUp, Cell{4, 0}, 0.0, 0, false, false});
  ds.trajectories.push_back(tr);
  const auto sched = ValidateSchedule(ParseResponse(FixtureResponse("fourroom")), env.cell_map()).repaired;
  EXPECT_THROW(AugmentDataset(ds, sched, env, ShapingParams(0.99, 100)), InvalidState);
}

}  // namespace
}  // namespace storl
