#include <cmath>
#include <queue>
#include <random>

#include <gtest/gtest.h>

#include "storl/errors.h"
#include "storl/harness.h"
#include "storl/learner.h"

namespace storl {
namespace {

Environment Cliff() { return Environment::Make(TaskId::kCliffWalking); }

TEST(Encoder, CliffWalkingOneHot) {
  const Encoder enc(Cliff(), 4);
  const Eigen::VectorXd x = enc.Encode(Cell{3, 0});
  ASSERT_EQ(x.size(), 48);
  EXPECT_EQ(x(36), 1.0);
  EXPECT_EQ(x.sum(), 1.0);
  EXPECT_THROW(enc.Encode(Cell{4, 0}), InvalidState);
}

TEST(Encoder, FourRoomUsesFullGrid) {
  EXPECT_EQ(Encoder(Environment::Make(TaskId::kFourRoom), 3).state_width(), 121);
}

TEST(Encoder, ActionAndSubgoal) {
  const Encoder enc(Cliff(), 4);
  const Action up = Move::kUp;
  const Eigen::VectorXd x = enc.Encode(Cell{0, 0}, &up, 2);
  ASSERT_EQ(x.size(), 48 + 4 + 4);
  EXPECT_EQ(x(48), 1.0);
  EXPECT_EQ(x.segment(48, 4).sum(), 1.0);
  EXPECT_EQ(x(52 + 1), 1.0);
  double buf[4];
  EXPECT_THROW(enc.EncodeSubgoal(5, buf), PreconditionError);
  EXPECT_THROW(enc.EncodeSubgoal(0, buf), PreconditionError);
}

TEST(Encoder, GcbcPolicyWidth) {
  const Encoder enc(Cliff(), 4);
  const Learner l(Method::kGcbc, enc, LearnerHyper{}, 0.99, 0);
  EXPECT_EQ(l.policy().input_size(), 48 + 4);
  const Learner iql(Method::kIql, enc, LearnerHyper{}, 0.99, 0);
  EXPECT_EQ(iql.policy().input_size(), 48);
}

TEST(Encoder, MazeScaling) {
  const Environment env = Environment::Make(TaskId::kUMaze);
  const Encoder enc(env, 3);
  const Eigen::VectorXd x = enc.Encode(KinematicState{1.25, -2.5, 2.0, -1.0});
  ASSERT_EQ(x.size(), 4);
  EXPECT_DOUBLE_EQ(x(0), 0.5);
  EXPECT_DOUBLE_EQ(x(1), -1.0);
  EXPECT_DOUBLE_EQ(x(2), 1.0);
  EXPECT_DOUBLE_EQ(x(3), -0.5);
}

TEST(Losses, ExpectileHalfIsHalfMse) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  Eigen::RowVectorXd a(20), b(20);
  for (int i = 0; i < 20; ++i) {
    a(i) = n(rng);
    b(i) = n(rng);
  }
  EXPECT_NEAR(ExpectileLoss(a, b, 0.5), 0.5 * SquaredLoss(a, b), 1e-15);
}

TEST(Losses, SoftmaxNllSingle) {
  Eigen::MatrixXd logits(4, 1);
  logits << 0.1, 2.0, -1.0, 0.5;
  const double z = std::exp(0.1) + std::exp(2.0) + std::exp(-1.0) + std::exp(0.5);
  EXPECT_NEAR(WeightedSoftmaxNll(logits, {3}, Eigen::RowVectorXd::Ones(1)), -(0.5 - std::log(z)), 1e-14);
}

TEST(Actions, GreedyTieBreaksToFirst) {
  EXPECT_EQ(GreedyIndex(Eigen::Vector4d(0, 0, 0, 0)), 0);
  EXPECT_EQ(GreedyIndex(Eigen::Vector4d(0, 1, 1, 0)), 1);
  EXPECT_EQ(GreedyIndex(Eigen::Vector4d(0, 0, 0, 1)), 3);
}

TEST(Actions, SamplingIsSeeded) {
  const Eigen::Vector4d logits(0.3, -0.2, 1.0, 0.0);
  std::mt19937_64 a(9), b(9);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(SampleIndex(logits, a), SampleIndex(logits, b));
  const Eigen::Vector4d peaked(-1e3, -1e3, 0, -1e3);
  EXPECT_EQ(SampleIndex(peaked, a), 2);
}

// Single transition through hand-set nets: every net is zero apart from its
// output bias, so each output is a constant and one Adam step moves only
// that bias by lr * sign(grad).
TEST(Iql, SingleTransitionMatchesHandComputation) {
  const Environment env = Cliff();
  const Encoder enc(env, 4);
  LearnerHyper hp;
  hp.hidden = 3;
  const double gamma = 0.9;
  Learner l(Method::kStorl, enc, hp, gamma, 0);
  for (Mlp* m : {&l.value(), &l.q1(), &l.q2(), &l.q1_target(), &l.q2_target(), &l.policy()}) m->SetZero();
  const double v0 = 0.2, qa = 0.5, qb = 0.7, ta = 0.6, tb = 0.4, r = 0.3;
  l.value().layers().back().b(0) = v0;
  l.q1().layers().back().b(0) = qa;
  l.q2().layers().back().b(0) = qb;
  l.q1_target().layers().back().b(0) = ta;
  l.q2_target().layers().back().b(0) = tb;

  TransitionBatch batch;
  batch.states = enc.Encode(Cell{2, 0});
  const Action right = Move::kRight;
  batch.actions = enc.Encode(Cell{2, 0}, &right).tail(4);
  batch.next_states = enc.Encode(Cell{2, 1});
  batch.rewards = Eigen::RowVectorXd::Constant(1, r);
  batch.dones = Eigen::RowVectorXd::Zero(1);
  batch.action_index = {3};

  const auto adam = [&](double g) { return -hp.learning_rate * g / (std::abs(g) + 1e-8); };
  const double tq = std::min(ta, tb);
  const double u = tq - v0;
  const double w = u < 0 ? 1 - hp.expectile : hp.expectile;
  const double v1 = v0 + adam(-2 * w * u);
  const double weight = std::min(std::exp(hp.beta * (tq - v1)), hp.awr_clip);
  const double y = r + gamma * v1;
  const double qa1 = qa + adam(-2 * (y - qa));

  const IqlLosses losses = l.IqlUpdate(batch);
  EXPECT_NEAR(losses.value, w * u * u, 1e-15);
  EXPECT_NEAR(losses.policy, weight * std::log(4.0), 1e-12);
  EXPECT_NEAR(losses.q, 0.5 * ((y - qa) * (y - qa) + (y - qb) * (y - qb)), 1e-15);
  EXPECT_NEAR(l.value().layers().back().b(0), v1, 1e-15);
  EXPECT_NEAR(l.q1().layers().back().b(0), qa1, 1e-15);
  EXPECT_NEAR(l.q1_target().layers().back().b(0), (1 - hp.target_rate) * ta + hp.target_rate * qa1, 1e-15);
  EXPECT_EQ(l.step(), 1);
}

TEST(Iql, TerminalIgnoresNextValue) {
  const Encoder enc(Cliff(), 4);
  LearnerHyper hp;
  hp.hidden = 3;
  Learner l(Method::kIql, enc, hp, 0.99, 0);
  for (Mlp* m : {&l.value(), &l.q1(), &l.q2(), &l.q1_target(), &l.q2_target(), &l.policy()}) m->SetZero();
  l.value().layers().back().b(0) = 5.0;
  TransitionBatch b;
  b.states = enc.Encode(Cell{2, 11});
  const Action down = Move::kDown;
  b.actions = enc.Encode(Cell{2, 11}, &down).tail(4);
  b.next_states = enc.Encode(Cell{3, 11});
  b.rewards = Eigen::RowVectorXd::Ones(1);
  b.dones = Eigen::RowVectorXd::Ones(1);
  b.action_index = {1};
  EXPECT_NEAR(l.IqlUpdate(b).q, 1.0, 1e-15);
}

TEST(Iql, FixedPointHasSmallLosses) {
  const Encoder enc(Cliff(), 4);
  LearnerHyper hp;
  hp.hidden = 3;
  Learner l(Method::kIql, enc, hp, 0.99, 0);
  for (Mlp* m : {&l.value(), &l.q1(), &l.q2(), &l.q1_target(), &l.q2_target(), &l.policy()}) m->SetZero();
  // Q = V = 0 everywhere, r = 0; policy puts all mass on the data action.
  l.policy().layers().back().b(3) = 40.0;
  TransitionBatch b;
  b.states = enc.Encode(Cell{0, 0});
  const Action right = Move::kRight;
  b.actions = enc.Encode(Cell{0, 0}, &right).tail(4);
  b.next_states = enc.Encode(Cell{0, 1});
  b.rewards = Eigen::RowVectorXd::Zero(1);
  b.dones = Eigen::RowVectorXd::Zero(1);
  b.action_index = {3};
  const auto before = l.value().Flatten();
  const IqlLosses losses = l.IqlUpdate(b);
  EXPECT_EQ(losses.value, 0.0);
  EXPECT_EQ(losses.q, 0.0);
  EXPECT_LT(losses.policy, 1e-15);
  EXPECT_EQ(l.value().Flatten(), before);
}

TEST(Iql, EmptyBatchAndDivergence) {
  const Encoder enc(Cliff(), 4);
  LearnerHyper hp;
  hp.hidden = 3;
  Learner l(Method::kIql, enc, hp, 0.99, 0);
  EXPECT_THROW(l.IqlUpdate(TransitionBatch{}), PreconditionError);
  TransitionBatch b;
  b.states = enc.Encode(Cell{0, 0});
  const Action up = Move::kUp;
  b.actions = enc.Encode(Cell{0, 0}, &up).tail(4);
  b.next_states = b.states;
  b.rewards = Eigen::RowVectorXd::Constant(1, NAN);
  b.dones = Eigen::RowVectorXd::Zero(1);
  b.action_index = {0};
  EXPECT_THROW(l.IqlUpdate(b), DivergenceError);
}

TEST(Gcbc, SingleSampleLoss) {
  const Encoder enc(Cliff(), 4);
  LearnerHyper hp;
  hp.hidden = 5;
  Learner l(Method::kGcbc, enc, hp, 0.99, 3);
  TransitionBatch b;
  b.states = enc.Encode(Cell{1, 4});
  const Action left = Move::kLeft;
  b.actions = enc.Encode(Cell{1, 4}, &left).tail(4);
  b.next_states = enc.Encode(Cell{1, 3});
  b.rewards = Eigen::RowVectorXd::Zero(1);
  b.dones = Eigen::RowVectorXd::Zero(1);
  b.action_index = {2};
  b.subgoals = {2};
  const Eigen::VectorXd logits = l.PolicyOutput(l.PolicyInputs(b.states, b.subgoals)).col(0);
  const double expected = -(logits(2) - std::log(logits.array().exp().sum()));
  EXPECT_NEAR(l.GcbcUpdate(b), expected, 1e-12);
  EXPECT_THROW(l.GcbcUpdate(TransitionBatch{}), PreconditionError);
}

TEST(Gcbc, ConfidentPolicyHasNearZeroLoss) {
  const Encoder enc(Cliff(), 4);
  LearnerHyper hp;
  hp.hidden = 3;
  Learner l(Method::kGcbc, enc, hp, 0.99, 0);
  l.policy().SetZero();
  l.policy().layers().back().b(1) = 50.0;
  TransitionBatch b;
  b.states = enc.Encode(Cell{0, 0});
  const Action down = Move::kDown;
  b.actions = enc.Encode(Cell{0, 0}, &down).tail(4);
  b.next_states = enc.Encode(Cell{1, 0});
  b.rewards = Eigen::RowVectorXd::Zero(1);
  b.dones = Eigen::RowVectorXd::Zero(1);
  b.action_index = {1};
  b.subgoals = {1};
  EXPECT_LT(l.GcbcUpdate(b), 1e-20);
}

TEST(Learner, BlendOneCopiesLiveCritics) {
  const Encoder enc(Cliff(), 4);
  LearnerHyper hp;
  hp.hidden = 4;
  Learner l(Method::kIql, enc, hp, 0.99, 1);
  std::mt19937_64 rng(2);
  l.q1().InitRandom(rng);
  l.BlendTargets(1.0);
  EXPECT_EQ(l.q1_target().Flatten(), l.q1().Flatten());
}

TEST(Learner, ActGreedyUniformPicksUp) {
  const Encoder enc(Cliff(), 4);
  LearnerHyper hp;
  hp.hidden = 3;
  Learner l(Method::kIql, enc, hp, 0.99, 1);
  l.policy().SetZero();
  std::mt19937_64 rng(0);
  EXPECT_EQ(std::get<Move>(l.Act(Cell{1, 1}, ActMode::kGreedy, rng)), Move::kUp);
}

Dataset Small(const Environment& env, int episodes) {
  const auto expert = MakeExpert(env);
  GenerationConfig g;
  g.episodes = episodes;
  g.expert_prob = env.discrete() ? 0.5 : 0.3;
  return GenerateDataset(env, *expert, RandomPolicy(env.discrete()), g);
}

TEST(Learner, CheckpointRoundTrip) {
  for (TaskId task : {TaskId::kCliffWalking, TaskId::kUMaze}) {
    const Environment env = Environment::Make(task);
    const Encoder enc(env, 3);
    LearnerHyper hp;
    hp.hidden = 8;
    hp.batch_size = 16;
    Learner l(Method::kIql, enc, hp, env.gamma(), 4);
    const ReplayBuffer buf(Small(env, 5), enc, env);
    for (int i = 0; i < 5; ++i) l.Update(buf.Sample(hp.batch_size, l.rng()));
    const std::string ckpt = l.SaveCheckpoint(task);
    Learner back = Learner::LoadCheckpoint(ckpt, env);
    EXPECT_EQ(back.SaveCheckpoint(task), ckpt);
    EXPECT_EQ(back.step(), 5);
    // Continuing from the restored state matches continuing the original.
    l.Update(buf.Sample(hp.batch_size, l.rng()));
    back.Update(buf.Sample(hp.batch_size, back.rng()));
    EXPECT_EQ(back.SaveCheckpoint(task), l.SaveCheckpoint(task));
    EXPECT_THROW(Learner::LoadCheckpoint(ckpt, Environment::Make(TaskId::kMedium)), ConfigError);
    EXPECT_THROW(Learner::LoadCheckpoint(ckpt.substr(0, ckpt.size() - 8), env), ConfigError);
  }
}

TEST(Learner, ContinuousPolicyIsBounded) {
  const Environment env = Environment::Make(TaskId::kUMaze);
  const Encoder enc(env, 3);
  LearnerHyper hp;
  hp.hidden = 8;
  Learner l(Method::kIql, enc, hp, env.gamma(), 0);
  std::mt19937_64 rng(0);
  for (double x : {-2.0, 0.0, 1.0}) {
    const Force f = std::get<Force>(l.Act(KinematicState{x, 0.5, 0.1, -0.1}, ActMode::kSample, rng));
    EXPECT_LE(std::abs(f.fx), 1.0);
    EXPECT_LE(std::abs(f.fy), 1.0);
  }
}

TEST(Learner, HyperValidation) {
  LearnerHyper hp;
  hp.expectile = 0.5;
  EXPECT_THROW(hp.Validate(), ConfigError);
  hp = LearnerHyper{};
  hp.batch_size = 0;
  EXPECT_THROW(hp.Validate(), ConfigError);
  EXPECT_NO_THROW(LearnerHyper{}.Validate());
  EXPECT_THROW(ParseMethod("ppo"), ConfigError);
}

// BFS over the step function (cliff falls return to the start).
std::map<Cell, int> BfsToGoal(const GridSpec& s) {
  std::map<Cell, std::vector<Cell>> pred;
  for (int r = 0; r < s.height; ++r) {
    for (int c = 0; c < s.width; ++c) {
      const Cell cell{r, c};
      if (s.IsWall(cell) || s.cliff.count(cell) || cell == s.goal) continue;
      for (int a = 0; a < kNumMoves; ++a) pred[GridStep(s, cell, static_cast<Move>(a)).next].push_back(cell);
    }
  }
  std::map<Cell, int> dist{{s.goal, 0}};
  std::queue<Cell> q;
  q.push(s.goal);
  while (!q.empty()) {
    const Cell c = q.front();
    q.pop();
    for (Cell p : pred[c]) {
      if (dist.emplace(p, dist[c] + 1).second) q.push(p);
    }
  }
  return dist;
}

TEST(ValueIteration, MatchesBfsDistances) {
  for (const GridSpec& s : {CliffWalking(), FourRoom()}) {
    const double gamma = 0.99;
    const TabularPlan plan = ValueIteration(s, gamma);
    EXPECT_LT(plan.residual, 1e-10);
    for (const auto& [cell, d] : BfsToGoal(s)) {
      if (d == 0) continue;
      EXPECT_NEAR(plan.Value(cell), std::pow(gamma, d - 1), 1e-9);
    }
  }
}

TEST(ValueIteration, GreedyRolloutLengths) {
  for (auto [spec, expected] : {std::pair{CliffWalking(), 13}, std::pair{FourRoom(), 20}}) {
    const TabularPlan plan = ValueIteration(spec, 0.99);
    Cell c = spec.start;
    int steps = 0;
    while (c != spec.goal && steps < 100) {
      c = GridStep(spec, c, plan.Greedy(c)).next;
      ++steps;
    }
    EXPECT_EQ(steps, expected);
  }
}

TEST(ValueIteration, TiesFollowMoveOrder) {
  // From (0,0) in FourRoom, down and right are both shortest; down wins.
  const TabularPlan plan = ValueIteration(FourRoom(), 0.99);
  EXPECT_EQ(plan.Greedy({0, 0}), Move::kDown);
}

}  // namespace
}  // namespace storl
