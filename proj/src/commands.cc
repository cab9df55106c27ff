#include "storl/commands.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "storl/dataset.h"
#include "storl/errors.h"
#include "storl/harness.h"
#include "storl/shaping.h"

namespace storl {

using Json = nlohmann::ordered_json;

std::string ReadFile(const std::string& path, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("missing " + std::string(what) + " file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::string& path, std::string_view contents) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw Error("cannot create directory " + p.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error("write failed for " + path);
}

namespace {

Json Summary(std::string_view command, const RunConfig& c) {
  Json j;
  j["command"] = command;
  j["task"] = TaskName(c.task);
  return j;
}

// Loads a saved schedule and re-runs validation so downstream steps always
// see a total, accepted mapping.
SubgoalSchedule LoadValidSchedule(const RunConfig& c, const Environment& env) {
  const SubgoalSchedule loaded = LoadSchedule(ReadFile(c.paths.schedule, "schedule"));
  if (loaded.task() != TaskName(c.task)) {
    throw ConfigError("schedule " + c.paths.schedule + " is for task '" + loaded.task() + "'");
  }
  const ValidationReport report = ValidateSchedule(loaded, env.cell_map());
  if (!report.accepted) throw ConfigError("schedule rejected: " + report.Summary());
  return report.repaired;
}

Dataset LoadDataset(const std::string& path, const RunConfig& c) {
  Dataset ds = DeserializeDataset(ReadFile(path, "dataset"));
  if (ds.task != c.task) {
    throw ConfigError("dataset " + path + " is for task '" + std::string(TaskName(ds.task)) + "'");
  }
  return ds;
}

}  // namespace

std::string CmdPlan(const RunConfig& c) {
  const Environment env = MakeEnvironment(c);
  const std::string task(TaskName(c.task));
  const PromptRequest prompt = BuildPrompt(task);
  const PlannerResponse response = FetchPlan(task, prompt, c.planner);
  SubgoalSchedule parsed = ParseResponse(response.text);
  parsed.set_task(task);
  parsed.set_provenance(response.provenance);
  const ValidationReport report = ValidateSchedule(parsed, env.cell_map());
  if (!report.accepted) throw Error("schedule rejected: " + report.Summary());
  WriteFile(c.paths.schedule, SaveSchedule(report.repaired));

  Json j = Summary("plan", c);
  j["K"] = report.repaired.K();
  j["source"] = response.provenance.source;
  j["uncovered"] = report.uncovered.size();
  j["duplicates"] = report.duplicates.size();
  j["in_walls"] = report.in_walls.size();
  j["schedule"] = c.paths.schedule;
  return j.dump();
}

std::string CmdGenData(const RunConfig& c) {
  const Environment env = MakeEnvironment(c);
  const auto expert = MakeExpert(env);
  const RandomPolicy random(env.discrete());
  GenerationConfig gen;
  gen.expert_prob = c.expert_prob;
  gen.episodes = c.episodes;
  gen.seed = c.seed;
  gen.config_digest = DataConfigDigest(c);
  const Dataset ds = GenerateDataset(env, *expert, random, gen);
  const std::string text = SerializeDataset(ds);
  WriteFile(c.paths.dataset, text);

  const DatasetStats st = ComputeStats(ds);
  Json j = Summary("gen-data", c);
  j["trajectories"] = st.trajectories;
  j["transitions"] = ds.TransitionCount();
  j["success_rate"] = st.success_rate;
  j["mean_length"] = st.mean_length;
  j["std_length"] = st.std_length;
  j["digest"] = HexDigest(text);
  j["dataset"] = c.paths.dataset;
  return j.dump();
}

std::string CmdAugment(const RunConfig& c) {
  const Environment env = MakeEnvironment(c);
  const Dataset ds = LoadDataset(c.paths.dataset, c);
  if (ds.shaping) throw ConfigError(c.paths.dataset + " is already shaped");
  const SubgoalSchedule schedule = LoadValidSchedule(c, env);
  const ShapingParams params(c.gamma, c.horizon);
  const ShapedDataset shaped = AugmentDataset(ds, schedule, env, params);
  const std::string text = SerializeDataset(shaped.ToDataset());
  WriteFile(c.paths.shaped, text);

  Json j = Summary("augment", c);
  j["K"] = schedule.K();
  j["gamma"] = params.gamma;
  j["horizon"] = params.horizon;
  if (params.BoundaryWarning()) j["warning"] = "gamma <= (T-1)/T: non-progress steps are not strictly penalised";
  j["transitions"] = ds.TransitionCount();
  j["digest"] = HexDigest(text);
  j["shaped"] = c.paths.shaped;
  return j.dump();
}

std::string CmdTrain(const RunConfig& c) {
  const Environment env = MakeEnvironment(c);
  const bool storl = c.method == Method::kStorl;
  const Dataset ds = LoadDataset(storl ? c.paths.shaped : c.paths.dataset, c);
  if (storl) {
    if (!ds.shaping) throw ConfigError(c.paths.shaped + " is not a shaped dataset");
    if (ds.shaping->gamma != c.gamma || ds.shaping->horizon != c.horizon) {
      throw ConfigError("shaped dataset was built with a different gamma or horizon");
    }
  }
  std::optional<SubgoalSchedule> schedule;
  if (c.method == Method::kGcbc) schedule = LoadValidSchedule(c, env);

  TrainOptions options;
  options.eval_every = c.eval_every;
  options.eval_episodes = c.eval_episodes;
  options.eval_seed = c.eval_seed;
  const TrainResult result = Train(c.method, env, ds, schedule ? &*schedule : nullptr, c.learner,
                                   c.seed, options);
  WriteFile(c.paths.checkpoint, result.learner.SaveCheckpoint(c.task));
  Json j = Summary("train", c);
  j["method"] = MethodName(c.method);
  j["iterations"] = c.learner.iterations;
  j["success_rate"] = result.final_report.success_rate;
  j["mean_steps"] = result.final_report.mean_steps;
  j["mean_success_steps"] = result.final_report.mean_success_steps;
  j["checkpoint"] = c.paths.checkpoint;
  if (!result.curve.empty()) {
    WriteFile(c.paths.curve, CurveCsv(result.curve));
    const auto conv = IterationsToConvergence(result.curve, c.smoothing_window);
    j["converged_at"] = conv ? Json(*conv) : Json("never");
    j["curve"] = c.paths.curve;
  }
  if (env.discrete() && c.method != Method::kGcbc) {
    WriteFile(c.paths.value_map, RenderValueMap(ExportValueMap(result.learner, env)));
    j["value_map"] = c.paths.value_map;
  }
  return j.dump();
}

std::string CmdEval(const RunConfig& c) {
  const Environment env = MakeEnvironment(c);
  const Learner learner = Learner::LoadCheckpoint(ReadFile(c.paths.checkpoint, "checkpoint"), env);
  std::optional<SubgoalSchedule> schedule;
  if (learner.method() == Method::kGcbc) schedule = LoadValidSchedule(c, env);
  const LearnerPolicy policy(learner, env, schedule ? &*schedule : nullptr);
  const EvalReport report = Evaluate(policy, env, c.eval_episodes, c.eval_seed);

  Json doc;
  doc["task"] = TaskName(c.task);
  doc["method"] = MethodName(learner.method());
  doc["step"] = learner.step();
  doc["report"] = Json::parse(EvalReportJson(report));
  WriteFile(c.paths.report, doc.dump(2) + "\n");

  Json j = Summary("eval", c);
  j["method"] = MethodName(learner.method());
  j["episodes"] = report.episodes;
  j["success_rate"] = report.success_rate;
  j["mean_steps"] = report.mean_steps;
  j["std_steps"] = report.std_steps;
  j["mean_success_steps"] = report.mean_success_steps;
  j["report"] = c.paths.report;
  return j.dump();
}

std::string CmdVerify(const RunConfig& c) {
  const TheoremReport report = RunTheoremSuite(c.verify);
  WriteFile(c.paths.verify_report, report.Json());
  Json j;
  j["command"] = "verify";
  j["passed"] = report.passed();
  for (const auto& check : report.checks) j[check.name] = check.passed() ? "pass" : "FAIL";
  j["verify_report"] = c.paths.verify_report;
  if (!report.passed()) throw Error("theorem checks failed: " + j.dump());
  return j.dump();
}

const std::vector<std::string>& CommandNames() {
  static const std::vector<std::string> names{"plan", "gen-data", "augment",
                                              "train", "eval", "verify"};
  return names;
}

std::string RunCommand(std::string_view name, const RunConfig& config) {
  if (name == "plan") return CmdPlan(config);
  if (name == "gen-data") return CmdGenData(config);
  if (name == "augment") return CmdAugment(config);
  if (name == "train") return CmdTrain(config);
  if (name == "eval") return CmdEval(config);
  if (name == "verify") return CmdVerify(config);
  throw ConfigError("unknown command '" + std::string(name) + "'");
}

}  // namespace storl
