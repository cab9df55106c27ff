#include <cmath>
#include <queue>
#include <random>

#include <gtest/gtest.h>

#include "storl/env.h"
#include "storl/errors.h"

namespace storl {
namespace {

TEST(GridStep, CliffResetsToStart) {
  const GridSpec s = CliffWalking();
  const auto r = GridStep(s, {3, 0}, Move::kRight);
  EXPECT_EQ(r.next, (Cell{3, 0}));
  EXPECT_EQ(r.reward, 0.0);
  EXPECT_FALSE(r.done);
}

TEST(GridStep, GoalPaysOne) {
  const auto r = GridStep(CliffWalking(), {2, 11}, Move::kDown);
  EXPECT_EQ(r.next, (Cell{3, 11}));
  EXPECT_EQ(r.reward, 1.0);
  EXPECT_TRUE(r.done);
}

TEST(GridStep, BlockedMoveIsIdentity) {
  const auto r = GridStep(FourRoom(), {0, 4}, Move::kRight);
  EXPECT_EQ(r.next, (Cell{0, 4}));
  EXPECT_EQ(r.reward, 0.0);
  const auto edge = GridStep(FourRoom(), {0, 0}, Move::kUp);
  EXPECT_EQ(edge.next, (Cell{0, 0}));
}

TEST(GridStep, WallStateThrows) {
  EXPECT_THROW(GridStep(FourRoom(), {5, 0}, Move::kUp), InvalidState);
}

TEST(GridStep, RewardOnlyAtGoal) {
  for (const GridSpec& s : {CliffWalking(), FourRoom()}) {
    for (int r = 0; r < s.height; ++r) {
      for (int c = 0; c < s.width; ++c) {
        const Cell cell{r, c};
        if (s.IsWall(cell) || s.cliff.count(cell) || cell == s.goal) continue;
        for (int a = 0; a < kNumMoves; ++a) {
          const auto res = GridStep(s, cell, static_cast<Move>(a));
          EXPECT_EQ(res.reward == 1.0, res.next == s.goal);
          EXPECT_TRUE(res.reward == 0.0 || res.reward == 1.0);
          EXPECT_EQ(res.done, res.next == s.goal);
        }
      }
    }
  }
}

TEST(Specs, CliffWalkingLayout) {
  const GridSpec s = CliffWalking();
  EXPECT_EQ(s.height, 4);
  EXPECT_EQ(s.width, 12);
  EXPECT_EQ(s.start, (Cell{3, 0}));
  EXPECT_EQ(s.goal, (Cell{3, 11}));
  EXPECT_EQ(s.cliff.size(), 10u);
  EXPECT_EQ(s.horizon, 100);
}

TEST(Specs, FourRoomHas104ReachableCells) {
  const GridSpec s = FourRoom();
  EXPECT_EQ(s.width * s.height - static_cast<int>(s.walls.size()), 104);
  for (Cell gap : {Cell{5, 2}, Cell{5, 8}, Cell{2, 5}, Cell{8, 5}}) EXPECT_FALSE(s.IsWall(gap));
  EXPECT_EQ(s.start, (Cell{0, 0}));
  EXPECT_EQ(s.goal, (Cell{10, 10}));
  // BFS over the step function itself.
  std::set<Cell> seen{s.start};
  std::queue<Cell> q;
  q.push(s.start);
  while (!q.empty()) {
    const Cell c = q.front();
    q.pop();
    for (int a = 0; a < kNumMoves; ++a) {
      const Cell n = GridStep(s, c, static_cast<Move>(a)).next;
      if (seen.insert(n).second) q.push(n);
    }
  }
  EXPECT_EQ(seen.size(), 104u);
}

TEST(Specs, MazeHorizons) {
  EXPECT_EQ(UMaze().horizon, 200);
  EXPECT_EQ(MediumMaze().horizon, 500);
  EXPECT_EQ(UMaze().rows(), 5);
  EXPECT_EQ(MediumMaze().rows(), 8);
}

TEST(CellMatrix, RoundTrip) {
  const CellMatrix m = ParseCellMatrix(UMazeText());
  EXPECT_EQ(m, UMaze().cells);
  EXPECT_EQ(ParseCellMatrix(RenderCellMatrix(m)), m);
  EXPECT_THROW(ParseCellMatrix("0 1\n0 x\n"), ParseError);
  EXPECT_THROW(ParseCellMatrix("0 1\n0\n"), ParseError);
}

TEST(Kinematic, ZeroForceIsFixedPoint) {
  const MazeSpec m = UMaze();
  const KinematicState s{m.start_center.x, m.start_center.y, 0.0, 0.0};
  const auto r = KinematicStep(m, s, {0.0, 0.0}, m.goal_center);
  EXPECT_EQ(r.next, s);
  EXPECT_EQ(r.reward, 0.0);
  EXPECT_FALSE(r.done);
}

TEST(Kinematic, GoalRadius) {
  const MazeSpec m = UMaze();
  const Vec2 g = m.goal_center;
  const KinematicState s{g.x + 0.49, g.y, 0.0, 0.0};
  const auto r = KinematicStep(m, s, {0.0, 0.0}, g);
  EXPECT_EQ(r.reward, 1.0);
  EXPECT_TRUE(r.done);
  const auto far = KinematicStep(m, {g.x + 0.51, g.y, 0.0, 0.0}, {0.0, 0.0}, g);
  EXPECT_FALSE(far.done);
}

TEST(Kinematic, DoubleIntegratorUpdate) {
  const MazeSpec m = UMaze();
  const Vec2 c = m.start_center;
  const auto r = KinematicStep(m, {c.x, c.y, 0.0, 0.0}, {1.0, -0.5}, m.goal_center);
  EXPECT_NEAR(r.next.vx, 0.1, 1e-15);
  EXPECT_NEAR(r.next.vy, -0.05, 1e-15);
  EXPECT_NEAR(r.next.x, c.x + 0.01, 1e-15);
  EXPECT_NEAR(r.next.y, c.y - 0.005, 1e-15);
}

TEST(Kinematic, SpeedClipped) {
  const MazeSpec m = UMaze();
  const Vec2 c = m.start_center;
  const auto r = KinematicStep(m, {c.x, c.y, 0.0, 1.99}, {0.0, 1.0}, m.goal_center);
  EXPECT_LE(std::abs(r.next.vy), m.max_speed);
}

TEST(Kinematic, WallZeroesNormalVelocityOnly) {
  const MazeSpec m = UMaze();
  // Walk towards the outer boundary from the start cell until blocked.
  const Vec2 c = m.start_center;
  KinematicState s{c.x, c.y, 1.0, 2.0};
  bool hit = false;
  for (int i = 0; i < 100 && !hit; ++i) {
    const auto r = KinematicStep(m, s, {0.0, 1.0}, {100.0, 100.0});
    if (r.next.vy == 0.0 && s.vy > 0.0) {
      hit = true;
      EXPECT_NE(r.next.vx, 0.0);
    }
    s = r.next;
  }
  EXPECT_TRUE(hit);
}

TEST(Kinematic, NonFiniteForceThrows) {
  const MazeSpec m = UMaze();
  EXPECT_THROW(KinematicStep(m, {0, 0, 0, 0}, {NAN, 0.0}, m.goal_center), InvalidAction);
}

TEST(Reset, GridStartIsFixed) {
  const Environment env = Environment::Make(TaskId::kCliffWalking);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(std::get<Cell>(env.Reset(rng).state), (Cell{3, 0}));
}

TEST(Reset, ZeroNoiseGivesCellCentre) {
  MazeSpec m = UMaze();
  m.noise_std = {0.0, 0.0};
  std::mt19937_64 rng(1);
  const KinematicState s = SampleMazeStart(m, rng);
  EXPECT_EQ(s.x, m.start_center.x);
  EXPECT_EQ(s.y, m.start_center.y);
  EXPECT_EQ(s.vx, 0.0);
}

TEST(Reset, SampledStartsLieOnPaths) {
  const MazeSpec m = UMaze();
  std::mt19937_64 rng(7);
  for (int i = 0; i < 10000; ++i) {
    const KinematicState s = SampleMazeStart(m, rng);
    const Cell c = CellOf(m, s.x, s.y);
    ASSERT_GE(c.row, 0);
    ASSERT_LT(c.row, m.rows());
    ASSERT_FALSE(IsWallAt(m, c)) << s.x << "," << s.y;
  }
}

TEST(Geometry, CellCentreRoundTrip) {
  const MazeSpec m = MediumMaze();
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      const Vec2 p = CellCenter(m, {r, c});
      EXPECT_EQ(CellOf(m, p.x, p.y), (Cell{r, c}));
    }
  }
}

TEST(Environment, HorizonAndGamma) {
  EXPECT_EQ(Environment::Make(TaskId::kFourRoom).horizon(), 100);
  EXPECT_EQ(Environment::Make(TaskId::kUMaze).horizon(), 200);
  EXPECT_THROW(ParseTaskId("nope"), ConfigError);
  EXPECT_EQ(ParseTaskId("medium"), TaskId::kMedium);
}

}  // namespace
}  // namespace storl
