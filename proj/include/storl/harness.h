#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "storl/dataset.h"
#include "storl/env.h"
#include "storl/learner.h"
#include "storl/planner.h"

namespace storl {

// Independent stream for episode `index` of a run seeded with `seed`.
std::mt19937_64 EpisodeRng(std::uint64_t seed, std::uint64_t index);

class Policy {
 public:
  virtual ~Policy() = default;
  // One action per state; goals[i] is the goal of the episode states[i] is in.
  virtual std::vector<Action> ActBatch(const std::vector<State>& states,
                                       const std::vector<Vec2>& goals,
                                       std::mt19937_64& rng) const = 0;
  Action Act(const State& state, Vec2 goal, std::mt19937_64& rng) const;
};

class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(bool discrete) : discrete_(discrete) {}
  std::vector<Action> ActBatch(const std::vector<State>& states, const std::vector<Vec2>& goals,
                               std::mt19937_64& rng) const override;

 private:
  bool discrete_;
};

// Greedy policy of a value-iteration plan.
class TabularExpert : public Policy {
 public:
  explicit TabularExpert(TabularPlan plan) : plan_(std::move(plan)) {}
  std::vector<Action> ActBatch(const std::vector<State>& states, const std::vector<Vec2>& goals,
                               std::mt19937_64& rng) const override;
  const TabularPlan& plan() const { return plan_; }

 private:
  TabularPlan plan_;
};

// Maze expert: follows the shortest cell path to the goal cell, steering
// towards the next cell centre (then the goal itself) with a saturating
// velocity controller.
class WaypointExpert : public Policy {
 public:
  explicit WaypointExpert(const MazeSpec& spec);
  std::vector<Action> ActBatch(const std::vector<State>& states, const std::vector<Vec2>& goals,
                               std::mt19937_64& rng) const override;
  Force Control(const KinematicState& s, Vec2 goal) const;

 private:
  MazeSpec spec_;
  CellMap map_;
  // next_[goal_index][cell_index]: neighbour one step closer to the goal cell.
  std::vector<std::vector<int>> next_;
};

// Wraps a learner. Grid policies in greedy mode are tabulated once up front.
class LearnerPolicy : public Policy {
 public:
  LearnerPolicy(const Learner& learner, const Environment& env,
                const SubgoalSchedule* schedule, ActMode mode = ActMode::kGreedy);
  std::vector<Action> ActBatch(const std::vector<State>& states, const std::vector<Vec2>& goals,
                               std::mt19937_64& rng) const override;

 private:
  const Learner& learner_;
  const Environment& env_;
  const SubgoalSchedule* schedule_;
  ActMode mode_;
  std::vector<int> table_;  // greedy move per cell, -1 for walls
};

// With probability expert_prob the expert acts, otherwise the random policy.
struct GenerationConfig {
  double expert_prob = 0.5;
  int episodes = 1000;
  std::uint64_t seed = 0;
  std::string config_digest;
};

Dataset GenerateDataset(const Environment& env, const Policy& expert, const Policy& random,
                        const GenerationConfig& config);

// Builds the task's expert: value iteration on grids, waypoints on mazes.
std::unique_ptr<Policy> MakeExpert(const Environment& env);

// Re-steps every stored transition; throws InvalidState on the first mismatch.
void ReplayDataset(const Dataset& dataset, const Environment& env);

struct DatasetStats {
  int trajectories = 0;
  double success_rate = 0.0;
  double mean_length = 0.0;
  double std_length = 0.0;
};

DatasetStats ComputeStats(const Dataset& dataset);

struct EvalReport {
  int episodes = 0;
  int successes = 0;
  double success_rate = 0.0;
  // Over all episodes, failures counted at the horizon.
  double mean_steps = 0.0;
  double std_steps = 0.0;
  // Over successful episodes only; zero when there are none.
  double mean_success_steps = 0.0;
  double std_success_steps = 0.0;
};

EvalReport Evaluate(const Policy& policy, const Environment& env, int episodes,
                    std::uint64_t seed);

std::string EvalReportJson(const EvalReport& report);

struct CurvePoint {
  int iteration = 0;
  double success = 0.0;
  double mean_steps = 0.0;
};

// Trailing moving average; the first window-1 entries average what is
// available so far.
std::vector<double> SmoothCurve(const std::vector<double>& values, int window);
std::vector<CurvePoint> SmoothCurve(const std::vector<CurvePoint>& points, int window);

// First iteration from which the smoothed success stays >= threshold to the
// end of the run; nullopt if that never happens.
std::optional<int> IterationsToConvergence(const std::vector<CurvePoint>& curve,
                                           int window_points, double threshold = 0.99);

std::string CurveCsv(const std::vector<CurvePoint>& curve);

struct ValueMap {
  int height = 0;
  int width = 0;
  std::vector<char> kind;      // 'W' wall, 'S' start, 'G' goal, '.' other
  std::vector<double> value;   // V(s); 0 on walls
  std::vector<int> action;     // argmax_a min(Q1, Q2)(s, a); -1 on walls
};

ValueMap ExportValueMap(const Learner& learner, const Environment& env);
// One line per grid row; cells are "W" or "[S:|G:]<value><arrow>".
std::string RenderValueMap(const ValueMap& map);

struct TrainOptions {
  int eval_every = 10;  // 0: evaluate once at the end
  int eval_episodes = 100;
  std::uint64_t eval_seed = 0;
};

struct TrainResult {
  Learner learner;
  std::vector<CurvePoint> curve;
  EvalReport final_report;
};

// Trains `method` for hyper.iterations minibatch steps. `dataset` is the
// shaped dataset for storl and the base dataset otherwise; `schedule` is
// required for gcbc.
TrainResult Train(Method method, const Environment& env, const Dataset& dataset,
                  const SubgoalSchedule* schedule, const LearnerHyper& hyper,
                  std::uint64_t seed, const TrainOptions& options);

}  // namespace storl
