#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "storl/env.h"

namespace storl {

struct Subgoal {
  std::string name;
  std::vector<Cell> cells;  // listing order
  bool operator==(const Subgoal&) const = default;
};

struct Provenance {
  enum class Kind { kFixture, kLlm };
  Kind kind = Kind::kFixture;
  std::string source;     // fixture name or model id
  std::string timestamp;  // live responses only
  bool operator==(const Provenance&) const = default;
};

// K ordered subgoals and the cell -> progress index map h they induce.
// A cell listed under several subgoals maps to the earliest one.
class SubgoalSchedule {
 public:
  SubgoalSchedule() = default;
  SubgoalSchedule(std::string task, std::vector<Subgoal> subgoals,
                  Provenance provenance = {});

  const std::string& task() const { return task_; }
  void set_task(std::string task) { task_ = std::move(task); }
  int K() const { return static_cast<int>(subgoals_.size()); }
  const std::vector<Subgoal>& subgoals() const { return subgoals_; }
  const Provenance& provenance() const { return provenance_; }
  void set_provenance(Provenance p) { provenance_ = std::move(p); }

  // 1-based progress index, or nullopt for unlisted cells.
  std::optional<int> Find(Cell cell) const;
  const std::map<Cell, int>& index() const { return index_; }

  bool operator==(const SubgoalSchedule& o) const {
    return task_ == o.task_ && subgoals_ == o.subgoals_ &&
           provenance_ == o.provenance_;
  }

 private:
  std::string task_;
  std::vector<Subgoal> subgoals_;
  Provenance provenance_;
  std::map<Cell, int> index_;
};

struct PromptRequest {
  std::string instruction;
  std::string map_block;
  std::string response_format;

  std::string Text() const;
};

// Builds the planner prompt for a task. `map_text` overrides the built-in
// map matrix for maze and FourRoom tasks; CliffWalking is described in prose.
PromptRequest BuildPrompt(std::string_view task_id, std::string_view map_text = {});

struct EndpointConfig {
  enum class Mode { kFixture, kLive };
  Mode mode = Mode::kFixture;
  std::string base_url;  // e.g. https://api.example.com/v1
  std::string api_key_env = "STORL_API_KEY";
  std::string model;
  int retries = 3;
  int backoff_ms = 500;
  int timeout_sec = 120;
  double temperature = 0.0;
  std::string fixture;  // fixture name; defaults to the task id
};

struct PlannerResponse {
  std::string text;
  Provenance provenance;
};

// Bundled planner responses: cliffwalking, fourroom, umaze, medium,
// medium_example1, medium_example2.
std::vector<std::string> FixtureNames();
std::string_view FixtureResponse(std::string_view name);

PlannerResponse FetchPlan(std::string_view task_id, const PromptRequest& request,
                          const EndpointConfig& config);

// Extracts "SubTask n: '<name>', containing states: (r,c), ..." entries in
// listing order. Lines starting with '#' are comments.
SubgoalSchedule ParseResponse(std::string_view text);

// Inverse of ParseResponse for the subgoal list.
std::string RenderResponse(const SubgoalSchedule& schedule);

struct ValidationReport {
  std::vector<Cell> uncovered;
  std::vector<std::pair<Cell, std::vector<int>>> duplicates;  // 1-based indices
  std::vector<Cell> in_walls;
  bool start_ok = false;  // h(start) == 1 after repair
  bool goal_ok = false;   // h(goal) == K after repair
  bool accepted = false;
  SubgoalSchedule repaired;

  std::string Summary() const;
};

// Reports coverage problems and repairs them: wall cells are dropped,
// duplicates keep their earliest subgoal, and uncovered cells inherit the
// index of the nearest listed cell (Manhattan, ties to the smaller index).
ValidationReport ValidateSchedule(const SubgoalSchedule& schedule,
                                  const CellMap& map);

// Progress index of a state; continuous positions are floored to unit cells.
int ProgressIndex(const SubgoalSchedule& schedule, Cell cell);
int ProgressIndex(const SubgoalSchedule& schedule, const Environment& env,
                  const State& state);

std::string SaveSchedule(const SubgoalSchedule& schedule);
SubgoalSchedule LoadSchedule(std::string_view document);

}  // namespace storl
