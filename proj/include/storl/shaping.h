#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "storl/dataset.h"
#include "storl/env.h"
#include "storl/planner.h"

namespace storl {

struct ShapingParams {
  double gamma = 0.99;
  int horizon = 100;

  ShapingParams() = default;
  ShapingParams(double gamma, int horizon);

  // True when gamma <= (T-1)/T: non-progress penalties are no longer strictly
  // negative at t = T-1.
  bool BoundaryWarning() const;
};

// Phi(t, k) = -(t / T) * (1 / k).
double Potential(int t, int k, int horizon);

// r' = r + gamma * Phi(t+1, k_next) - Phi(t, k).
double ShapedReward(double reward, int t, int k, int k_next,
                    const ShapingParams& params);

bool IsPositiveProgress(int k, int k_next);

struct ShapedTransition {
  Transition base;
  int k = 1;
  int k_next = 1;
  double shaped_reward = 0.0;
};

using ShapedTrajectory = std::vector<ShapedTransition>;

struct ShapedDataset {
  std::vector<ShapedTrajectory> trajectories;
  std::vector<Vec2> goals;
  ShapingParams params;
  TaskId task = TaskId::kCliffWalking;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string source_digest;
  std::string schedule_digest;

  // Same record layout as the source with rewards replaced by r'.
  Dataset ToDataset() const;
};

// Rewrites every reward with its shaped value. The goal-reaching transition
// uses k_next = K regardless of the cell the final state falls in.
ShapedDataset AugmentDataset(const Dataset& dataset,
                             const SubgoalSchedule& schedule,
                             const Environment& env,
                             const ShapingParams& params);

// Closed-form preference gap for a progressing successor (k_c) over a
// non-progressing one (k_n), both with zero base reward.
double CheckTheorem1(int t, int k, int k_c, int k_n, const ShapingParams& params);

// gamma * Phi(t+1, k_next) - Phi(t, k) for a non-progress transition.
double CheckTheorem2(int t, int k, int k_next, const ShapingParams& params);

// Sum_t gamma^t r_t with either base or shaped rewards. Timesteps must run
// 0, 1, 2, ... without gaps.
double TrajectoryReturn(std::span<const ShapedTransition> trajectory,
                        const ShapingParams& params, bool shaped);

// gamma^{T_L} Phi(T_L, k_{T_L}) - Phi(0, k_0): the difference between shaped
// and base returns implied by telescoping.
double TelescopedShapingTerm(std::span<const ShapedTransition> trajectory,
                             const ShapingParams& params);

// Which end-of-trajectory convention a successful progress sequence matched.
enum class SuccessConvention {
  kNone,
  kPostGoalState,  // k of the state after the last action equals K
  kLastState,      // k of the state before the last action equals K
};

// Checks k_0 = 1, a final index of K, and one unit increment across each of
// the K-1 index boundaries, in order.
SuccessConvention CheckSuccessful(std::span<const ShapedTransition> trajectory, int K);

// Shaped returns of a shorter and a longer successful trajectory.
std::pair<double, double> CheckTheorem3(std::span<const ShapedTransition> shorter,
                                        std::span<const ShapedTransition> longer,
                                        int K, const ShapingParams& params);

// Synthetic trajectory over a progress sequence k_0..k_{T_L}; the last
// transition reaches the goal with base reward 1.
ShapedTrajectory FromProgressSequence(const std::vector<int>& ks,
                                      const ShapingParams& params);

}  // namespace storl
