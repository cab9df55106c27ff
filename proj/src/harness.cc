#include "storl/harness.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>

#include <json.hpp>

#include "storl/errors.h"

namespace storl {

std::mt19937_64 EpisodeRng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

Action Policy::Act(const State& state, Vec2 goal, std::mt19937_64& rng) const {
  return ActBatch({state}, {goal}, rng).front();
}

std::vector<Action> RandomPolicy::ActBatch(const std::vector<State>& states,
                                           const std::vector<Vec2>&,
                                           std::mt19937_64& rng) const {
  std::vector<Action> out;
  out.reserve(states.size());
  for (size_t i = 0; i < states.size(); ++i) {
    if (discrete_) {
      out.emplace_back(static_cast<Move>(std::uniform_int_distribution<int>(0, kNumMoves - 1)(rng)));
    } else {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      const double fx = u(rng);
      const double fy = u(rng);
      out.emplace_back(Force{fx, fy});
    }
  }
  return out;
}

std::vector<Action> TabularExpert::ActBatch(const std::vector<State>& states,
                                            const std::vector<Vec2>&,
                                            std::mt19937_64&) const {
  std::vector<Action> out;
  out.reserve(states.size());
  for (const State& s : states) out.emplace_back(plan_.Greedy(std::get<Cell>(s)));
  return out;
}

// --- Maze expert ---------------------------------------------------------------

WaypointExpert::WaypointExpert(const MazeSpec& spec) : spec_(spec), map_(ToCellMap(spec)) {
  const int n = map_.height * map_.width;
  next_.assign(static_cast<size_t>(n), std::vector<int>(static_cast<size_t>(n), -1));
  constexpr int dr[] = {-1, 1, 0, 0};
  constexpr int dc[] = {0, 0, -1, 1};
  for (int g = 0; g < n; ++g) {
    if (map_.wall[static_cast<size_t>(g)]) continue;
    std::vector<int> dist(static_cast<size_t>(n), -1);
    std::deque<int> queue{g};
    dist[static_cast<size_t>(g)] = 0;
    while (!queue.empty()) {
      const int c = queue.front();
      queue.pop_front();
      for (int d = 0; d < 4; ++d) {
        const Cell nb{c / map_.width + dr[d], c % map_.width + dc[d]};
        if (!map_.InBounds(nb) || map_.IsWall(nb)) continue;
        const int i = nb.row * map_.width + nb.col;
        if (dist[static_cast<size_t>(i)] >= 0) continue;
        dist[static_cast<size_t>(i)] = dist[static_cast<size_t>(c)] + 1;
        queue.push_back(i);
      }
    }
    auto& next = next_[static_cast<size_t>(g)];
    for (int c = 0; c < n; ++c) {
      const int dc_ = dist[static_cast<size_t>(c)];
      if (dc_ <= 0) {
        if (dc_ == 0) next[static_cast<size_t>(c)] = c;
        continue;
      }
      for (int d = 0; d < 4; ++d) {
        const Cell nb{c / map_.width + dr[d], c % map_.width + dc[d]};
        if (!map_.InBounds(nb)) continue;
        const int i = nb.row * map_.width + nb.col;
        if (dist[static_cast<size_t>(i)] == dc_ - 1) {
          next[static_cast<size_t>(c)] = i;
          break;
        }
      }
    }
  }
}

Force WaypointExpert::Control(const KinematicState& s, Vec2 goal) const {
  constexpr double kCruise = 1.5;
  constexpr double kApproach = 2.0;
  constexpr double kGain = 10.0;
  const Cell here = CellOf(spec_, s.x, s.y);
  const Cell goal_cell = CellOf(spec_, goal.x, goal.y);
  if (!map_.InBounds(here) || !map_.InBounds(goal_cell)) return {};
  const int g = goal_cell.row * map_.width + goal_cell.col;
  const int h = here.row * map_.width + here.col;
  const int next = next_[static_cast<size_t>(g)][static_cast<size_t>(h)];
  if (next < 0) return {};
  const Vec2 target = (next == g) ? goal : CellCenter(spec_, {next / map_.width, next % map_.width});
  const double dx = target.x - s.x;
  const double dy = target.y - s.y;
  const double dist = std::hypot(dx, dy);
  double vx = 0.0;
  double vy = 0.0;
  if (dist > 1e-12) {
    const double speed = std::min(kCruise, kApproach * dist);
    vx = dx / dist * speed;
    vy = dy / dist * speed;
  }
  return {std::clamp(kGain * (vx - s.vx), -1.0, 1.0), std::clamp(kGain * (vy - s.vy), -1.0, 1.0)};
}

std::vector<Action> WaypointExpert::ActBatch(const std::vector<State>& states,
                                             const std::vector<Vec2>& goals,
                                             std::mt19937_64&) const {
  std::vector<Action> out;
  out.reserve(states.size());
  for (size_t i = 0; i < states.size(); ++i) {
    out.emplace_back(Control(std::get<KinematicState>(states[i]), goals[i]));
  }
  return out;
}

// --- Learner policy ----------------------------------------------------------------

LearnerPolicy::LearnerPolicy(const Learner& learner, const Environment& env,
                             const SubgoalSchedule* schedule, ActMode mode)
    : learner_(learner), env_(env), schedule_(schedule), mode_(mode) {
  if (learner_.method() == Method::kGcbc && !schedule_) {
    throw PreconditionError("gcbc policies need the subgoal schedule");
  }
  if (!env_.discrete() || mode_ != ActMode::kGreedy) return;
  const CellMap& map = env_.cell_map();
  std::vector<State> cells;
  std::vector<int> ks;
  for (const Cell& c : map.FreeCells()) {
    cells.emplace_back(c);
    if (learner_.method() == Method::kGcbc) ks.push_back(ProgressIndex(*schedule_, c));
  }
  std::mt19937_64 unused(0);
  const auto actions = learner_.ActBatch(cells, ks, ActMode::kGreedy, unused);
  table_.assign(static_cast<size_t>(map.height * map.width), -1);
  for (size_t i = 0; i < cells.size(); ++i) {
    const Cell c = std::get<Cell>(cells[i]);
    table_[static_cast<size_t>(c.row * map.width + c.col)] = static_cast<int>(std::get<Move>(actions[i]));
  }
}

std::vector<Action> LearnerPolicy::ActBatch(const std::vector<State>& states,
                                            const std::vector<Vec2>&,
                                            std::mt19937_64& rng) const {
  if (!table_.empty()) {
    std::vector<Action> out;
    out.reserve(states.size());
    const int width = env_.cell_map().width;
    for (const State& s : states) {
      const Cell c = std::get<Cell>(s);
      out.emplace_back(static_cast<Move>(table_.at(static_cast<size_t>(c.row * width + c.col))));
    }
    return out;
  }
  std::vector<int> ks;
  if (learner_.method() == Method::kGcbc) {
    ks.reserve(states.size());
    for (const State& s : states) ks.push_back(ProgressIndex(*schedule_, env_, s));
  }
  return learner_.ActBatch(states, ks, mode_, rng);
}

// --- Dataset generation ------------------------------------------------------------

Dataset GenerateDataset(const Environment& env, const Policy& expert, const Policy& random,
                        const GenerationConfig& config) {
  if (!(config.expert_prob >= 0.0 && config.expert_prob <= 1.0)) {
    throw ConfigError("expert_prob must lie in [0, 1]");
  }
  if (config.episodes < 0) throw ConfigError("episodes must be non-negative");
  Dataset ds;
  ds.task = env.task();
  ds.seed = config.seed;
  ds.config_digest = config.config_digest;
  ds.trajectories.reserve(static_cast<size_t>(config.episodes));
  const int horizon = env.horizon();
  for (int i = 0; i < config.episodes; ++i) {
    std::mt19937_64 rng = EpisodeRng(config.seed, static_cast<std::uint64_t>(i));
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    const EpisodeStart start = env.Reset(rng);
    Trajectory traj;
    traj.goal = start.goal;
    State s = start.state;
    for (int t = 0; t < horizon; ++t) {
      const bool use_expert = coin(rng) < config.expert_prob;
      const Action a = (use_expert ? expert : random).Act(s, start.goal, rng);
      const auto r = env.Step(s, a, start.goal);
      Transition tr;
      tr.state = s;
      tr.action = a;
      tr.next_state = r.next;
      tr.reward = r.reward;
      tr.t = t;
      tr.reached_goal = r.done;
      tr.done = r.done || t + 1 == horizon;
      traj.steps.push_back(tr);
      s = r.next;
      if (r.done) break;
    }
    traj.success = !traj.steps.empty() && traj.steps.back().reached_goal;
    ds.trajectories.push_back(std::move(traj));
  }
  return ds;
}

std::unique_ptr<Policy> MakeExpert(const Environment& env) {
  if (env.discrete()) return std::make_unique<TabularExpert>(ValueIteration(env.grid(), env.gamma()));
  return std::make_unique<WaypointExpert>(env.maze());
}

void ReplayDataset(const Dataset& dataset, const Environment& env) {
  if (dataset.task != env.task()) throw InvalidState("dataset task does not match the environment");
  const int horizon = env.horizon();
  for (size_t i = 0; i < dataset.trajectories.size(); ++i) {
    const Trajectory& traj = dataset.trajectories[i];
    for (size_t j = 0; j < traj.steps.size(); ++j) {
      const Transition& tr = traj.steps[j];
      auto fail = [&](const std::string& what) {
        throw InvalidState("trajectory " + std::to_string(i) + ", step " + std::to_string(j) +
                           ": " + what + " does not replay");
      };
      if (j > 0 && !(tr.state == traj.steps[j - 1].next_state)) fail("state");
      const auto r = env.Step(tr.state, tr.action, traj.goal);
      if (!(r.next == tr.next_state)) fail("next state");
      if (!dataset.shaping && r.reward != tr.reward) fail("reward");
      if (r.done != tr.reached_goal) fail("goal flag");
      if (tr.done != (r.done || tr.t + 1 == horizon)) fail("done flag");
      if (!r.done && tr.t + 1 < horizon && j + 1 == traj.steps.size()) fail("episode end");
    }
  }
}

namespace {

std::pair<double, double> MeanStd(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  double sq = 0.0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  return {mean, std::sqrt(sq / static_cast<double>(xs.size()))};
}

}  // namespace

DatasetStats ComputeStats(const Dataset& dataset) {
  DatasetStats st;
  st.trajectories = static_cast<int>(dataset.trajectories.size());
  if (st.trajectories == 0) return st;
  std::vector<double> lengths;
  int successes = 0;
  for (const auto& traj : dataset.trajectories) {
    lengths.push_back(static_cast<double>(traj.steps.size()));
    if (traj.success) ++successes;
  }
  st.success_rate = static_cast<double>(successes) / st.trajectories;
  std::tie(st.mean_length, st.std_length) = MeanStd(lengths);
  return st;
}

// --- Evaluation --------------------------------------------------------------------

EvalReport Evaluate(const Policy& policy, const Environment& env, int episodes,
                    std::uint64_t seed) {
  if (episodes <= 0) throw PreconditionError("evaluation needs at least one episode");
  const int horizon = env.horizon();
  std::vector<State> states;
  std::vector<Vec2> goals;
  for (int i = 0; i < episodes; ++i) {
    std::mt19937_64 rng = EpisodeRng(seed, static_cast<std::uint64_t>(i));
    const EpisodeStart start = env.Reset(rng);
    states.push_back(start.state);
    goals.push_back(start.goal);
  }
  std::mt19937_64 act_rng = EpisodeRng(seed, static_cast<std::uint64_t>(episodes));
  std::vector<int> steps(static_cast<size_t>(episodes), horizon);
  std::vector<bool> success(static_cast<size_t>(episodes), false);
  std::vector<int> active(static_cast<size_t>(episodes));
  for (int i = 0; i < episodes; ++i) active[static_cast<size_t>(i)] = i;

  std::vector<State> batch_states;
  std::vector<Vec2> batch_goals;
  for (int t = 0; t < horizon && !active.empty(); ++t) {
    batch_states.clear();
    batch_goals.clear();
    for (int i : active) {
      batch_states.push_back(states[static_cast<size_t>(i)]);
      batch_goals.push_back(goals[static_cast<size_t>(i)]);
    }
    const auto actions = policy.ActBatch(batch_states, batch_goals, act_rng);
    std::vector<int> still;
    for (size_t j = 0; j < active.size(); ++j) {
      const auto i = static_cast<size_t>(active[j]);
      const auto r = env.Step(states[i], actions[j], goals[i]);
      states[i] = r.next;
      if (r.done) {
        success[i] = true;
        steps[i] = t + 1;
      } else {
        still.push_back(active[j]);
      }
    }
    active = std::move(still);
  }

  EvalReport report;
  report.episodes = episodes;
  std::vector<double> all;
  std::vector<double> ok;
  for (int i = 0; i < episodes; ++i) {
    all.push_back(steps[static_cast<size_t>(i)]);
    if (success[static_cast<size_t>(i)]) {
      ++report.successes;
      ok.push_back(steps[static_cast<size_t>(i)]);
    }
  }
  report.success_rate = static_cast<double>(report.successes) / episodes;
  std::tie(report.mean_steps, report.std_steps) = MeanStd(all);
  std::tie(report.mean_success_steps, report.std_success_steps) = MeanStd(ok);
  return report;
}

std::string EvalReportJson(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["episodes"] = r.episodes;
  j["successes"] = r.successes;
  j["success_rate"] = r.success_rate;
  j["mean_steps"] = r.mean_steps;
  j["std_steps"] = r.std_steps;
  j["mean_success_steps"] = r.mean_success_steps;
  j["std_success_steps"] = r.std_success_steps;
  return j.dump();
}

// --- Curves ------------------------------------------------------------------------

std::vector<double> SmoothCurve(const std::vector<double>& values, int window) {
  if (window < 1) throw PreconditionError("smoothing window must be >= 1");
  if (values.empty()) throw PreconditionError("cannot smooth an empty series");
  std::vector<double> out(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    const size_t n = std::min(i + 1, static_cast<size_t>(window));
    // Deviations from the window's first value, so constant runs stay exact.
    const double ref = values[i + 1 - n];
    double dev = 0.0;
    for (size_t k = i + 1 - n; k <= i; ++k) dev += values[k] - ref;
    out[i] = ref + dev / static_cast<double>(n);
  }
  return out;
}

std::vector<CurvePoint> SmoothCurve(const std::vector<CurvePoint>& points, int window) {
  std::vector<double> s;
  std::vector<double> m;
  for (const auto& p : points) {
    s.push_back(p.success);
    m.push_back(p.mean_steps);
  }
  const auto ss = SmoothCurve(s, window);
  const auto ms = SmoothCurve(m, window);
  std::vector<CurvePoint> out = points;
  for (size_t i = 0; i < out.size(); ++i) {
    out[i].success = ss[i];
    out[i].mean_steps = ms[i];
  }
  return out;
}

std::optional<int> IterationsToConvergence(const std::vector<CurvePoint>& curve,
                                           int window_points, double threshold) {
  if (curve.empty()) throw PreconditionError("empty learning curve");
  const auto smooth = SmoothCurve(curve, window_points);
  std::optional<int> first;
  for (size_t i = smooth.size(); i-- > 0;) {
    if (smooth[i].success < threshold) break;
    first = smooth[i].iteration;
  }
  return first;
}

std::string CurveCsv(const std::vector<CurvePoint>& curve) {
  std::string out = "iteration,success,mean_steps\n";
  for (const auto& p : curve) {
    out += std::to_string(p.iteration) + ',' + FormatDouble(p.success) + ',' +
           FormatDouble(p.mean_steps) + '\n';
  }
  return out;
}

// --- Value maps ----------------------------------------------------------------------

ValueMap ExportValueMap(const Learner& learner, const Environment& env) {
  if (!env.discrete()) throw PreconditionError("value maps need a grid task");
  const CellMap& map = env.cell_map();
  ValueMap out;
  out.height = map.height;
  out.width = map.width;
  const auto n = static_cast<size_t>(map.height * map.width);
  out.kind.assign(n, '.');
  out.value.assign(n, 0.0);
  out.action.assign(n, -1);
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      const Cell cell{r, c};
      const auto i = static_cast<size_t>(r * map.width + c);
      if (map.IsWall(cell)) {
        out.kind[i] = 'W';
        continue;
      }
      if (cell == map.start) out.kind[i] = 'S';
      if (cell == map.goal) out.kind[i] = 'G';
      out.value[i] = learner.Value(cell);
      out.action[i] = GreedyIndex(learner.MoveValues(cell));
    }
  }
  return out;
}

std::string RenderValueMap(const ValueMap& map) {
  static constexpr char kArrows[] = {'^', 'v', '<', '>'};
  std::string out;
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      const auto i = static_cast<size_t>(r * map.width + c);
      if (c > 0) out += ',';
      if (map.kind[i] == 'W') {
        out += 'W';
        continue;
      }
      if (map.kind[i] == 'S') out += "S:";
      if (map.kind[i] == 'G') out += "G:";
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4f", map.value[i] == 0.0 ? 0.0 : map.value[i]);
      out += buf;
      out += kArrows[map.action[i]];
    }
    out += '\n';
  }
  return out;
}

// --- Training --------------------------------------------------------------------------

TrainResult Train(Method method, const Environment& env, const Dataset& dataset,
                  const SubgoalSchedule* schedule, const LearnerHyper& hyper,
                  std::uint64_t seed, const TrainOptions& options) {
  if (method == Method::kGcbc && !schedule) throw ConfigError("gcbc needs a subgoal schedule");
  if (method == Method::kStorl && !dataset.shaping) {
    throw ConfigError("storl trains on a shaped dataset; run augment first");
  }
  if (method != Method::kStorl && dataset.shaping) {
    throw ConfigError(std::string(MethodName(method)) + " trains on the unshaped dataset");
  }
  if (dataset.task != env.task()) throw ConfigError("dataset task does not match the environment");
  const int K = method == Method::kGcbc ? schedule->K() : 0;
  const Encoder encoder(env, K);
  Learner learner(method, encoder, hyper, env.gamma(), seed);
  const ReplayBuffer buffer(dataset, encoder, env, method == Method::kGcbc ? schedule : nullptr);
  if (buffer.size() == 0) throw PreconditionError("dataset has no transitions");

  std::vector<CurvePoint> curve;
  auto evaluate = [&](int iteration) {
    const LearnerPolicy policy(learner, env, schedule);
    const EvalReport r = Evaluate(policy, env, options.eval_episodes, options.eval_seed);
    curve.push_back({iteration, r.success_rate, r.mean_steps});
    return r;
  };
  EvalReport last;
  bool last_is_final = false;
  if (options.eval_every > 0) {
    last = evaluate(0);
    last_is_final = hyper.iterations == 0;
  }
  for (int it = 1; it <= hyper.iterations; ++it) {
    learner.Update(buffer.Sample(hyper.batch_size, learner.rng()));
    if (options.eval_every > 0 && it % options.eval_every == 0) {
      last = evaluate(it);
      last_is_final = it == hyper.iterations;
    }
  }
  if (!last_is_final) {
    const LearnerPolicy policy(learner, env, schedule);
    last = Evaluate(policy, env, options.eval_episodes, options.eval_seed);
  }
  return TrainResult{std::move(learner), std::move(curve), last};
}

}  // namespace storl
