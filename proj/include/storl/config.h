#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "storl/env.h"
#include "storl/learner.h"
#include "storl/planner.h"
#include "storl/verify.h"

namespace storl {

inline constexpr int kConfigSchemaVersion = 1;

struct PathConfig {
  std::string schedule = "out/schedule.json";
  std::string dataset = "out/dataset.txt";
  std::string shaped = "out/shaped.txt";
  std::string checkpoint = "out/model.ckpt";
  std::string curve = "out/curve.csv";
  std::string value_map = "out/value_map.csv";
  std::string report = "out/report.json";
  std::string verify_report = "out/verify.json";
};

struct RunConfig {
  TaskId task = TaskId::kCliffWalking;
  Method method = Method::kStorl;
  std::uint64_t seed = 0;
  double gamma = 0.99;  // task default unless overridden
  int horizon = 100;
  int episodes = 1000;
  double expert_prob = 0.5;
  LearnerHyper learner;
  int eval_episodes = 100;
  int eval_every = 10;
  std::uint64_t eval_seed = 1;
  int smoothing_window = 5;  // curve points
  EndpointConfig planner;
  VerifyOptions verify;
  PathConfig paths;
};

// Defaults as a document; null marks task-dependent values.
nlohmann::ordered_json DefaultConfigDocument();

// Sets a dotted key ("learner.iterations=500"). The value is read as JSON
// when it parses, otherwise as a string.
void ApplyOverride(nlohmann::ordered_json& doc, std::string_view assignment);

// Merges `user` over the defaults, rejecting unknown keys and bad types.
RunConfig ParseRunConfig(const nlohmann::ordered_json& user,
                         const std::vector<std::string>& overrides = {});
RunConfig LoadRunConfig(const std::string& path, const std::vector<std::string>& overrides = {});

nlohmann::ordered_json ToDocument(const RunConfig& config);

// Task environment with the configured discount and horizon.
Environment MakeEnvironment(const RunConfig& config);

// Digest of the settings that determine a generated dataset.
std::string DataConfigDigest(const RunConfig& config);

}  // namespace storl
