#include "storl/verify.h"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "storl/errors.h"
#include "storl/harness.h"
#include "storl/shaping.h"

namespace storl {

namespace {

int Uniform(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

void Record(TheoremCheck& check, bool ok, double error, const std::string& what) {
  ++check.cases;
  check.worst = std::max(check.worst, error);
  if (!ok) {
    if (check.failures == 0) check.detail = what;
    ++check.failures;
  }
}

// Progress sequence k_0..k_L with k_0 = 1, k_L = K and K-1 unit steps at
// distinct random transitions.
std::vector<int> RandomSuccessfulSequence(std::mt19937_64& rng, int K, int length) {
  std::vector<int> slots(static_cast<size_t>(length));
  for (int i = 0; i < length; ++i) slots[static_cast<size_t>(i)] = i;
  for (int i = 0; i < K - 1; ++i) {
    const int j = Uniform(rng, i, length - 1);
    std::swap(slots[static_cast<size_t>(i)], slots[static_cast<size_t>(j)]);
  }
  std::vector<bool> step(static_cast<size_t>(length), false);
  for (int i = 0; i < K - 1; ++i) step[static_cast<size_t>(slots[static_cast<size_t>(i)])] = true;
  std::vector<int> ks{1};
  for (int t = 0; t < length; ++t) ks.push_back(ks.back() + (step[static_cast<size_t>(t)] ? 1 : 0));
  return ks;
}

std::string Tuple(int t, int k, int a, int b) {
  return "t=" + std::to_string(t) + " k=" + std::to_string(k) + " " + std::to_string(a) + "/" +
         std::to_string(b);
}

TheoremCheck Theorem1(const ShapingParams& p, const VerifyOptions& o, std::mt19937_64& rng) {
  TheoremCheck c;
  c.name = "theorem1";
  for (int i = 0; i < o.samples; ++i) {
    const int K = Uniform(rng, 2, 50);
    const int k = Uniform(rng, 1, K - 1);
    const int k_c = Uniform(rng, k + 1, K);
    const int k_n = Uniform(rng, 1, k);
    const int t = Uniform(rng, 0, p.horizon - 1);
    const double direct = ShapedReward(0.0, t, k, k_c, p) - ShapedReward(0.0, t, k, k_n, p);
    const double closed = CheckTheorem1(t, k, k_c, k_n, p);
    const double err = std::abs(direct - closed);
    Record(c, closed > 0.0 && err <= o.tolerance, err, Tuple(t, k, k_c, k_n));
  }
  return c;
}

TheoremCheck Theorem2(const ShapingParams& p, const VerifyOptions& o, std::mt19937_64& rng) {
  TheoremCheck c;
  c.name = "theorem2";
  for (int i = 0; i < o.samples; ++i) {
    const int K = Uniform(rng, 1, 50);
    const int k = Uniform(rng, 1, K);
    const int k_next = Uniform(rng, 1, k);
    const int t = Uniform(rng, 0, p.horizon - 1);
    const double d = CheckTheorem2(t, k, k_next, p);
    const double oracle = -p.gamma * (t + 1.0) / (p.horizon * k_next) + t / (1.0 * p.horizon * k);
    const double err = std::abs(d - oracle);
    Record(c, d < 0.0 && err <= o.tolerance, err, Tuple(t, k, k_next, K));
  }
  return c;
}

TheoremCheck Lemma1(const ShapingParams& p, const VerifyOptions& o, std::mt19937_64& rng) {
  TheoremCheck c;
  c.name = "lemma1";
  for (int i = 0; i < o.samples; ++i) {
    const int K = Uniform(rng, 1, 10);
    const int length = Uniform(rng, std::max(1, K - 1), p.horizon);
    const auto a = FromProgressSequence(RandomSuccessfulSequence(rng, K, length), p);
    const auto b = FromProgressSequence(RandomSuccessfulSequence(rng, K, length), p);
    const double err = std::abs(TrajectoryReturn(a, p, true) - TrajectoryReturn(b, p, true));
    Record(c, err <= o.tolerance, err, "K=" + std::to_string(K) + " T_L=" + std::to_string(length));
  }
  return c;
}

TheoremCheck Theorem3(const ShapingParams& p, const VerifyOptions& o, std::mt19937_64& rng) {
  TheoremCheck c;
  c.name = "theorem3";
  for (int i = 0; i < o.pairs; ++i) {
    const int K = Uniform(rng, 1, 10);
    const int longer = Uniform(rng, std::max(2, K), p.horizon);
    const int shorter = Uniform(rng, std::max(1, K - 1), longer - 1);
    const auto s = FromProgressSequence(RandomSuccessfulSequence(rng, K, shorter), p);
    const auto l = FromProgressSequence(RandomSuccessfulSequence(rng, K, longer), p);
    const auto [rs, rl] = CheckTheorem3(s, l, K, p);
    Record(c, rs > rl, 0.0,
           "K=" + std::to_string(K) + " lengths " + std::to_string(shorter) + "/" +
               std::to_string(longer));
  }
  return c;
}

TheoremCheck Telescoping(const ShapingParams& p, const VerifyOptions& o, std::mt19937_64& rng) {
  TheoremCheck c;
  c.name = "telescoping";
  std::uniform_real_distribution<double> reward(-1.0, 1.0);
  for (int i = 0; i < o.trajectories; ++i) {
    const int K = Uniform(rng, 1, 20);
    const int length = Uniform(rng, 1, p.horizon);
    std::vector<int> ks;
    for (int t = 0; t <= length; ++t) ks.push_back(Uniform(rng, 1, K));
    ShapedTrajectory traj = FromProgressSequence(ks, p);
    for (auto& st : traj) {
      st.base.reward = reward(rng);
      st.shaped_reward = ShapedReward(st.base.reward, st.base.t, st.k, st.k_next, p);
    }
    const double diff = TrajectoryReturn(traj, p, true) - TrajectoryReturn(traj, p, false);
    const double err = std::abs(diff - TelescopedShapingTerm(traj, p));
    Record(c, err <= o.tolerance, err, "trajectory " + std::to_string(i));
  }
  return c;
}

// Expert rollouts on every task, shaped with that task's bundled schedule.
// Whether each rollout also passes through the subgoals in order is noted.
TheoremCheck Fixtures(const VerifyOptions& o) {
  TheoremCheck c;
  c.name = "fixtures";
  std::string notes;
  for (TaskId task : {TaskId::kCliffWalking, TaskId::kFourRoom, TaskId::kUMaze, TaskId::kMedium}) {
    const Environment env = Environment::Make(task);
    const auto report =
        ValidateSchedule(ParseResponse(FixtureResponse(TaskName(task))), env.cell_map());
    const auto expert = MakeExpert(env);
    const RandomPolicy random(env.discrete());
    GenerationConfig gen;
    gen.expert_prob = 1.0;
    gen.episodes = 1;
    gen.seed = o.seed;
    const Dataset ds = GenerateDataset(env, *expert, random, gen);
    const ShapingParams p(env.gamma(), env.horizon());
    const ShapedDataset shaped = AugmentDataset(ds, report.repaired, env, p);
    const auto& traj = shaped.trajectories.front();
    const double diff = TrajectoryReturn(traj, p, true) - TrajectoryReturn(traj, p, false);
    const double err = std::abs(diff - TelescopedShapingTerm(traj, p));
    const bool ok = report.accepted && ds.trajectories.front().success && err <= o.tolerance;
    Record(c, ok, err, std::string(TaskName(task)) + " expert rollout");
    const auto conv = CheckSuccessful(traj, report.repaired.K());
    if (!notes.empty()) notes += "; ";
    notes += std::string(TaskName(task)) + ": " +
             (conv == SuccessConvention::kNone            ? "subgoals not visited in order"
              : conv == SuccessConvention::kPostGoalState ? "ordered, final index after last step"
                                                          : "ordered, final index at last state");
  }
  if (c.failures == 0) c.detail = notes;
  return c;
}

}  // namespace

bool TheoremReport::passed() const {
  if (checks.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [](const TheoremCheck& c) { return c.passed(); });
}

std::string TheoremReport::Json() const {
  nlohmann::ordered_json j;
  j["passed"] = passed();
  auto& arr = j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    nlohmann::ordered_json e;
    e["name"] = c.name;
    e["passed"] = c.passed();
    e["cases"] = c.cases;
    e["failures"] = c.failures;
    e["worst_error"] = c.worst;
    e["detail"] = c.detail;
    arr.push_back(e);
  }
  return j.dump(2) + "\n";
}

TheoremReport RunTheoremSuite(const VerifyOptions& o) {
  const ShapingParams p(o.gamma, o.horizon);
  if (p.BoundaryWarning()) {
    throw ConfigError("the ordering theorems need gamma > (T-1)/T; got gamma=" +
                      FormatDouble(o.gamma) + " T=" + std::to_string(o.horizon));
  }
  if (o.samples < 1 || o.pairs < 1 || o.trajectories < 1) {
    throw ConfigError("verify sample counts must be positive");
  }
  TheoremReport report;
  std::mt19937_64 rng(o.seed);
  report.checks.push_back(Theorem1(p, o, rng));
  report.checks.push_back(Theorem2(p, o, rng));
  report.checks.push_back(Lemma1(p, o, rng));
  report.checks.push_back(Theorem3(p, o, rng));
  report.checks.push_back(Telescoping(p, o, rng));
  report.checks.push_back(Fixtures(o));
  return report;
}

}  // namespace storl
