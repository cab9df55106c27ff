#include "storl/config.h"

#include <fstream>
#include <sstream>

#include "storl/dataset.h"
#include "storl/errors.h"
#include "storl/shaping.h"

namespace storl {

using Json = nlohmann::ordered_json;

Json DefaultConfigDocument() {
  const RunConfig d;
  const PathConfig& p = d.paths;
  const LearnerHyper& l = d.learner;
  const EndpointConfig& e = d.planner;
  const VerifyOptions& v = d.verify;
  Json doc;
  doc["schema_version"] = kConfigSchemaVersion;
  doc["task"] = "cliffwalking";
  doc["method"] = "storl";
  doc["seed"] = 0;
  doc["env"] = {{"gamma", nullptr}, {"horizon", nullptr}};
  doc["data"] = {{"episodes", d.episodes}, {"expert_prob", nullptr}};
  doc["learner"] = {{"expectile", l.expectile},         {"beta", l.beta},
                    {"learning_rate", l.learning_rate}, {"batch_size", l.batch_size},
                    {"target_rate", l.target_rate},     {"iterations", nullptr},
                    {"hidden", l.hidden},               {"awr_clip", l.awr_clip},
                    {"policy_std", l.policy_std}};
  doc["eval"] = {{"episodes", d.eval_episodes},
                 {"every", d.eval_every},
                 {"seed", d.eval_seed},
                 {"smoothing_window", d.smoothing_window}};
  doc["planner"] = {{"mode", "fixture"},         {"fixture", e.fixture},
                    {"base_url", e.base_url},     {"model", e.model},
                    {"api_key_env", e.api_key_env}, {"retries", e.retries},
                    {"backoff_ms", e.backoff_ms}, {"timeout_sec", e.timeout_sec},
                    {"temperature", e.temperature}};
  doc["verify"] = {{"gamma", v.gamma},     {"horizon", v.horizon},
                   {"samples", v.samples}, {"pairs", v.pairs},
                   {"trajectories", v.trajectories}, {"seed", v.seed},
                   {"tolerance", v.tolerance}};
  doc["paths"] = {{"schedule", p.schedule},   {"dataset", p.dataset},
                  {"shaped", p.shaped},       {"checkpoint", p.checkpoint},
                  {"curve", p.curve},         {"value_map", p.value_map},
                  {"report", p.report},       {"verify_report", p.verify_report}};
  return doc;
}

namespace {

void Merge(Json& base, const Json& user, const std::string& prefix) {
  if (!user.is_object()) throw ConfigError("config section '" + prefix + "' must be an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    Json& slot = base[it.key()];
    if (slot.is_object()) {
      Merge(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

template <typename T>
T Get(const Json& doc, const std::string& section, const std::string& key) {
  const Json& node = section.empty() ? doc.at(key) : doc.at(section).at(key);
  const std::string name = section.empty() ? key : section + "." + key;
  try {
    if constexpr (std::is_same_v<T, std::string>) {
      if (!node.is_string()) throw ConfigError("");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!node.is_number()) throw ConfigError("");
    } else {
      if (!node.is_number_integer()) throw ConfigError("");
      if constexpr (std::is_unsigned_v<T>) {
        if (!node.is_number_unsigned() && node.get<std::int64_t>() < 0) throw ConfigError("");
      }
    }
    return node.get<T>();
  } catch (const std::exception&) {
    throw ConfigError("config key '" + name + "' has the wrong type");
  }
}

template <typename T>
std::optional<T> GetOptional(const Json& doc, const std::string& section, const std::string& key) {
  if (doc.at(section).at(key).is_null()) return std::nullopt;
  return Get<T>(doc, section, key);
}

}  // namespace

void ApplyOverride(Json& doc, std::string_view assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  Json* node = &doc;
  std::string_view rest = key;
  while (true) {
    const size_t dot = rest.find('.');
    const std::string part(rest.substr(0, dot));
    if (!node->is_object() || !node->contains(part)) {
      throw ConfigError("unknown config key '" + key + "'");
    }
    node = &(*node)[part];
    if (dot == std::string_view::npos) break;
    rest = rest.substr(dot + 1);
  }
  if (node->is_object()) throw ConfigError("config key '" + key + "' is a section");
  *node = value;
}

RunConfig ParseRunConfig(const Json& user, const std::vector<std::string>& overrides) {
  Json doc = DefaultConfigDocument();
  Merge(doc, user, "");
  for (const auto& o : overrides) ApplyOverride(doc, o);
  if (Get<int>(doc, "", "schema_version") != kConfigSchemaVersion) {
    throw ConfigError("unsupported config schema_version (expected " +
                      std::to_string(kConfigSchemaVersion) + ")");
  }

  RunConfig c;
  c.task = ParseTaskId(Get<std::string>(doc, "", "task"));
  c.method = ParseMethod(Get<std::string>(doc, "", "method"));
  c.seed = Get<std::uint64_t>(doc, "", "seed");
  const Environment base = Environment::Make(c.task);
  const bool grid = base.discrete();
  c.gamma = GetOptional<double>(doc, "env", "gamma").value_or(base.gamma());
  c.horizon = GetOptional<int>(doc, "env", "horizon").value_or(base.horizon());
  ShapingParams(c.gamma, c.horizon);  // range checks

  c.episodes = Get<int>(doc, "data", "episodes");
  if (c.episodes < 1) throw ConfigError("data.episodes must be positive");
  c.expert_prob = GetOptional<double>(doc, "data", "expert_prob").value_or(grid ? 0.5 : 0.3);
  if (!(c.expert_prob >= 0.0 && c.expert_prob <= 1.0)) {
    throw ConfigError("data.expert_prob must lie in [0, 1]");
  }

  LearnerHyper& l = c.learner;
  l.expectile = Get<double>(doc, "learner", "expectile");
  l.beta = Get<double>(doc, "learner", "beta");
  l.learning_rate = Get<double>(doc, "learner", "learning_rate");
  l.batch_size = Get<int>(doc, "learner", "batch_size");
  l.target_rate = Get<double>(doc, "learner", "target_rate");
  l.iterations = GetOptional<int>(doc, "learner", "iterations").value_or(grid ? 1000 : 2000);
  l.hidden = Get<int>(doc, "learner", "hidden");
  l.awr_clip = Get<double>(doc, "learner", "awr_clip");
  l.policy_std = Get<double>(doc, "learner", "policy_std");
  l.Validate();

  c.eval_episodes = Get<int>(doc, "eval", "episodes");
  c.eval_every = Get<int>(doc, "eval", "every");
  c.eval_seed = Get<std::uint64_t>(doc, "eval", "seed");
  c.smoothing_window = Get<int>(doc, "eval", "smoothing_window");
  if (c.eval_episodes < 1) throw ConfigError("eval.episodes must be positive");
  if (c.eval_every < 0) throw ConfigError("eval.every must be >= 0");
  if (c.smoothing_window < 1) throw ConfigError("eval.smoothing_window must be >= 1");

  EndpointConfig& e = c.planner;
  const std::string mode = Get<std::string>(doc, "planner", "mode");
  if (mode == "fixture") {
    e.mode = EndpointConfig::Mode::kFixture;
  } else if (mode == "live") {
    e.mode = EndpointConfig::Mode::kLive;
  } else {
    throw ConfigError("planner.mode must be 'fixture' or 'live'");
  }
  e.fixture = Get<std::string>(doc, "planner", "fixture");
  e.base_url = Get<std::string>(doc, "planner", "base_url");
  e.model = Get<std::string>(doc, "planner", "model");
  e.api_key_env = Get<std::string>(doc, "planner", "api_key_env");
  e.retries = Get<int>(doc, "planner", "retries");
  e.backoff_ms = Get<int>(doc, "planner", "backoff_ms");
  e.timeout_sec = Get<int>(doc, "planner", "timeout_sec");
  e.temperature = Get<double>(doc, "planner", "temperature");
  if (e.mode == EndpointConfig::Mode::kLive && (e.base_url.empty() || e.model.empty())) {
    throw ConfigError("live planner mode needs planner.base_url and planner.model");
  }

  VerifyOptions& v = c.verify;
  v.gamma = Get<double>(doc, "verify", "gamma");
  v.horizon = Get<int>(doc, "verify", "horizon");
  v.samples = Get<int>(doc, "verify", "samples");
  v.pairs = Get<int>(doc, "verify", "pairs");
  v.trajectories = Get<int>(doc, "verify", "trajectories");
  v.seed = Get<std::uint64_t>(doc, "verify", "seed");
  v.tolerance = Get<double>(doc, "verify", "tolerance");

  PathConfig& p = c.paths;
  p.schedule = Get<std::string>(doc, "paths", "schedule");
  p.dataset = Get<std::string>(doc, "paths", "dataset");
  p.shaped = Get<std::string>(doc, "paths", "shaped");
  p.checkpoint = Get<std::string>(doc, "paths", "checkpoint");
  p.curve = Get<std::string>(doc, "paths", "curve");
  p.value_map = Get<std::string>(doc, "paths", "value_map");
  p.report = Get<std::string>(doc, "paths", "report");
  p.verify_report = Get<std::string>(doc, "paths", "verify_report");
  return c;
}

RunConfig LoadRunConfig(const std::string& path, const std::vector<std::string>& overrides) {
  Json user = Json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    try {
      user = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
  }
  return ParseRunConfig(user, overrides);
}

Json ToDocument(const RunConfig& c) {
  Json doc = DefaultConfigDocument();
  doc["task"] = std::string(TaskName(c.task));
  doc["method"] = std::string(MethodName(c.method));
  doc["seed"] = c.seed;
  doc["env"] = {{"gamma", c.gamma}, {"horizon", c.horizon}};
  doc["data"] = {{"episodes", c.episodes}, {"expert_prob", c.expert_prob}};
  const LearnerHyper& l = c.learner;
  doc["learner"] = {{"expectile", l.expectile},         {"beta", l.beta},
                    {"learning_rate", l.learning_rate}, {"batch_size", l.batch_size},
                    {"target_rate", l.target_rate},     {"iterations", l.iterations},
                    {"hidden", l.hidden},               {"awr_clip", l.awr_clip},
                    {"policy_std", l.policy_std}};
  doc["eval"] = {{"episodes", c.eval_episodes},
                 {"every", c.eval_every},
                 {"seed", c.eval_seed},
                 {"smoothing_window", c.smoothing_window}};
  const EndpointConfig& e = c.planner;
  doc["planner"] = {{"mode", e.mode == EndpointConfig::Mode::kLive ? "live" : "fixture"},
                    {"fixture", e.fixture},
                    {"base_url", e.base_url},
                    {"model", e.model},
                    {"api_key_env", e.api_key_env},
                    {"retries", e.retries},
                    {"backoff_ms", e.backoff_ms},
                    {"timeout_sec", e.timeout_sec},
                    {"temperature", e.temperature}};
  const VerifyOptions& v = c.verify;
  doc["verify"] = {{"gamma", v.gamma},     {"horizon", v.horizon},
                   {"samples", v.samples}, {"pairs", v.pairs},
                   {"trajectories", v.trajectories}, {"seed", v.seed},
                   {"tolerance", v.tolerance}};
  const PathConfig& p = c.paths;
  doc["paths"] = {{"schedule", p.schedule},   {"dataset", p.dataset},
                  {"shaped", p.shaped},       {"checkpoint", p.checkpoint},
                  {"curve", p.curve},         {"value_map", p.value_map},
                  {"report", p.report},       {"verify_report", p.verify_report}};
  return doc;
}

Environment MakeEnvironment(const RunConfig& c) {
  const Environment base = Environment::Make(c.task);
  if (base.discrete()) {
    GridSpec spec = base.grid();
    spec.gamma = c.gamma;
    spec.horizon = c.horizon;
    return Environment(c.task, std::move(spec));
  }
  MazeSpec spec = base.maze();
  spec.gamma = c.gamma;
  spec.horizon = c.horizon;
  return Environment(c.task, std::move(spec));
}

std::string DataConfigDigest(const RunConfig& c) {
  Json j;
  j["task"] = std::string(TaskName(c.task));
  j["seed"] = c.seed;
  j["episodes"] = c.episodes;
  j["expert_prob"] = c.expert_prob;
  j["gamma"] = c.gamma;
  j["horizon"] = c.horizon;
  return HexDigest(j.dump());
}

}  // namespace storl
