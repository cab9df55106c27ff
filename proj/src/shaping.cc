#include "storl/shaping.h"

#include <cmath>

#include "storl/errors.h"

namespace storl {

ShapingParams::ShapingParams(double g, int t) : gamma(g), horizon(t) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw ConfigError("discount must lie in (0, 1), got " + FormatDouble(gamma));
  }
  if (horizon < 1) throw ConfigError("horizon must be positive");
}

bool ShapingParams::BoundaryWarning() const {
  return gamma <= static_cast<double>(horizon - 1) / horizon;
}

double Potential(int t, int k, int horizon) {
  if (k < 1) throw PreconditionError("progress index must be >= 1, got " + std::to_string(k));
  if (t < 0) throw PreconditionError("timestep must be >= 0, got " + std::to_string(t));
  return -(static_cast<double>(t) / horizon) * (1.0 / k);
}

double ShapedReward(double reward, int t, int k, int k_next,
                    const ShapingParams& params) {
  return reward + params.gamma * Potential(t + 1, k_next, params.horizon) -
         Potential(t, k, params.horizon);
}

bool IsPositiveProgress(int k, int k_next) { return k < k_next; }

Dataset ShapedDataset::ToDataset() const {
  Dataset out;
  out.task = task;
  out.seed = seed;
  out.config_digest = config_digest;
  out.shaping = ShapingHeader{params.gamma, params.horizon, schedule_digest, source_digest};
  out.trajectories.reserve(trajectories.size());
  for (size_t i = 0; i < trajectories.size(); ++i) {
    Trajectory traj;
    traj.goal = goals[i];
    traj.steps.reserve(trajectories[i].size());
    for (const ShapedTransition& st : trajectories[i]) {
      Transition tr = st.base;
      tr.reward = st.shaped_reward;
      traj.steps.push_back(tr);
    }
    traj.success = !traj.steps.empty() && traj.steps.back().reached_goal;
    out.trajectories.push_back(std::move(traj));
  }
  return out;
}

ShapedDataset AugmentDataset(const Dataset& dataset,
                             const SubgoalSchedule& schedule,
                             const Environment& env,
                             const ShapingParams& params) {
  ShapedDataset out;
  out.params = params;
  out.task = dataset.task;
  out.seed = dataset.seed;
  out.config_digest = dataset.config_digest;
  out.source_digest = DatasetDigest(dataset);
  out.schedule_digest = HexDigest(SaveSchedule(schedule));
  out.trajectories.resize(dataset.trajectories.size());
  out.goals.resize(dataset.trajectories.size());

  const int K = schedule.K();
  for (size_t i = 0; i < dataset.trajectories.size(); ++i) {
    const Trajectory& traj = dataset.trajectories[i];
    out.goals[i] = traj.goal;
    ShapedTrajectory& shaped = out.trajectories[i];
    shaped.reserve(traj.steps.size());
    for (size_t j = 0; j < traj.steps.size(); ++j) {
      const Transition& tr = traj.steps[j];
      ShapedTransition st;
      st.base = tr;
      try {
        st.k = ProgressIndex(schedule, env, tr.state);
        st.k_next = tr.reached_goal ? K : ProgressIndex(schedule, env, tr.next_state);
      } catch (const InvalidState& e) {
        throw InvalidState("trajectory " + std::to_string(i) + ", step " +
                           std::to_string(j) + ": " + e.what());
      }
      st.shaped_reward = ShapedReward(tr.reward, tr.t, st.k, st.k_next, params);
      shaped.push_back(st);
    }
  }
  return out;
}

double CheckTheorem1(int t, int k, int k_c, int k_n, const ShapingParams& params) {
  if (!(k_n <= k && k < k_c)) {
    throw PreconditionError("requires k_n <= k < k_c, got k=" + std::to_string(k) +
                            " k_c=" + std::to_string(k_c) + " k_n=" + std::to_string(k_n));
  }
  if (k_n < 1) throw PreconditionError("progress index must be >= 1");
  return params.gamma * (static_cast<double>(t + 1) / params.horizon) *
         (1.0 / k_n - 1.0 / k_c);
}

double CheckTheorem2(int t, int k, int k_next, const ShapingParams& params) {
  return params.gamma * Potential(t + 1, k_next, params.horizon) -
         Potential(t, k, params.horizon);
}

namespace {

void RequireConsecutive(std::span<const ShapedTransition> traj) {
  for (size_t i = 0; i < traj.size(); ++i) {
    if (traj[i].base.t != static_cast<int>(i)) {
      throw PreconditionError("trajectory timesteps are not consecutive at index " +
                              std::to_string(i));
    }
  }
}

}  // namespace

double TrajectoryReturn(std::span<const ShapedTransition> trajectory,
                        const ShapingParams& params, bool shaped) {
  RequireConsecutive(trajectory);
  double total = 0.0;
  double discount = 1.0;
  for (const ShapedTransition& st : trajectory) {
    total += discount * (shaped ? st.shaped_reward : st.base.reward);
    discount *= params.gamma;
  }
  return total;
}

double TelescopedShapingTerm(std::span<const ShapedTransition> trajectory,
                             const ShapingParams& params) {
  RequireConsecutive(trajectory);
  if (trajectory.empty()) return 0.0;
  const int length = static_cast<int>(trajectory.size());
  return std::pow(params.gamma, length) *
             Potential(length, trajectory.back().k_next, params.horizon) -
         Potential(0, trajectory.front().k, params.horizon);
}

SuccessConvention CheckSuccessful(std::span<const ShapedTransition> trajectory, int K) {
  if (trajectory.empty() || trajectory.front().k != 1) return SuccessConvention::kNone;
  // Progress sequence k_0 .. k_{T_L}.
  std::vector<int> ks;
  ks.reserve(trajectory.size() + 1);
  for (const auto& st : trajectory) ks.push_back(st.k);
  ks.push_back(trajectory.back().k_next);

  auto crossings_ok = [&](size_t last) {
    int next = 1;
    for (size_t t = 0; t < last && next < K; ++t) {
      if (ks[t] == next && ks[t + 1] == next + 1) ++next;
    }
    return next == K;
  };
  if (ks.back() == K && crossings_ok(ks.size() - 1)) return SuccessConvention::kPostGoalState;
  if (ks[ks.size() - 2] == K && crossings_ok(ks.size() - 2)) return SuccessConvention::kLastState;
  return SuccessConvention::kNone;
}

std::pair<double, double> CheckTheorem3(std::span<const ShapedTransition> shorter,
                                        std::span<const ShapedTransition> longer,
                                        int K, const ShapingParams& params) {
  if (shorter.size() >= longer.size()) {
    throw PreconditionError("the first trajectory must be strictly shorter (L > 0)");
  }
  if (params.BoundaryWarning()) {
    throw PreconditionError("requires gamma > (T-1)/T");
  }
  if (CheckSuccessful(shorter, K) == SuccessConvention::kNone) {
    throw PreconditionError("shorter trajectory is not successful");
  }
  if (CheckSuccessful(longer, K) == SuccessConvention::kNone) {
    throw PreconditionError("longer trajectory is not successful");
  }
  return {TrajectoryReturn(shorter, params, true), TrajectoryReturn(longer, params, true)};
}

ShapedTrajectory FromProgressSequence(const std::vector<int>& ks,
                                      const ShapingParams& params) {
  ShapedTrajectory out;
  if (ks.size() < 2) return out;
  const int length = static_cast<int>(ks.size()) - 1;
  out.reserve(static_cast<size_t>(length));
  for (int t = 0; t < length; ++t) {
    ShapedTransition st;
    st.base.state = Cell{0, 0};
    st.base.action = Move::kRight;
    st.base.next_state = Cell{0, 0};
    st.base.t = t;
    const bool last = t + 1 == length;
    st.base.reward = last ? 1.0 : 0.0;
    st.base.done = last;
    st.base.reached_goal = last;
    st.k = ks[t];
    st.k_next = ks[t + 1];
    st.shaped_reward = ShapedReward(st.base.reward, t, st.k, st.k_next, params);
    out.push_back(st);
  }
  return out;
}

}  // namespace storl
