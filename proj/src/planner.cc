#include "storl/planner.h"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "storl/errors.h"

#ifdef STORL_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

namespace storl {

namespace {

constexpr std::string_view kResponseFormat =
    "Your response should be like:\n"
    "{ SubTask 1: \xE2\x80\x98Move to place\xE2\x80\x99, containing states: "
    "\xE2\x80\x9C(1, 1), (1, 2),\xE2\x80\xA6\xE2\x80\xA6\xE2\x80\x9D\n"
    ",\xE2\x80\xA6\xE2\x80\xA6,\n"
    "\xE2\x80\x98SubTask N: \xE2\x80\x98Move to goal\xE2\x80\x99, containing "
    "states:\xE2\x80\x9D\xE2\x80\xA6\xE2\x80\xA6\xE2\x80\x9D\n"
    "}\n";

constexpr std::string_view kHints =
    "(Hint: the subtask sequence should cover all states in the maze map "
    "EXCEPT the walls)\n"
    "(Hint: Each state can only be assigned to one sub-task)\n";

constexpr std::string_view kLegend =
    "Where \xE2\x80\x98r\xE2\x80\x99 is the Start State, \xE2\x80\x98g\xE2\x80\x99 "
    "is the Goal State, \xE2\x80\x98"
    "1\xE2\x80\x99 are walls and \xE2\x80\x98"
    "0\xE2\x80\x99 are paths where the agent can move.\n";

std::string MatrixBlock(std::string_view name, const CellMatrix& cells) {
  std::string out = std::string(name) + " = [\n";
  for (size_t i = 0; i < cells.size(); ++i) {
    out += "  [";
    for (size_t j = 0; j < cells[i].size(); ++j) {
      if (j) out += ", ";
      out += static_cast<char>(cells[i][j]);
    }
    out += i + 1 < cells.size() ? "],\n" : "]\n";
  }
  out += "]\n";
  return out;
}

// Opening quote at `pos`, returning its byte length and the set of closing
// sequences it accepts.
struct Quote {
  size_t length = 0;
  std::vector<std::string_view> closers;
};

Quote QuoteAt(std::string_view s, size_t pos) {
  auto starts = [&](std::string_view q) { return s.substr(pos, q.size()) == q; };
  if (starts("'")) return {1, {"'"}};
  if (starts("\"")) return {1, {"\""}};
  if (starts("\xE2\x80\x98")) return {3, {"\xE2\x80\x99", "\xE2\x80\x98", "'"}};
  if (starts("\xE2\x80\x9C")) return {3, {"\xE2\x80\x9D", "\xE2\x80\x9C", "\""}};
  return {};
}

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool ParseInt(std::string_view s, int& out) {
  const std::string t = Trim(s);
  if (t.empty()) return false;
  size_t i = 0;
  if (t[0] == '-' || t[0] == '+') i = 1;
  if (i == t.size()) return false;
  for (size_t k = i; k < t.size(); ++k) {
    if (t[k] < '0' || t[k] > '9') return false;
  }
  out = std::stoi(t);
  return true;
}

// Case-insensitive search.
size_t FindNoCase(std::string_view hay, std::string_view needle, size_t from) {
  if (needle.size() > hay.size()) return std::string_view::npos;
  for (size_t i = from; i + needle.size() <= hay.size(); ++i) {
    bool ok = true;
    for (size_t k = 0; k < needle.size(); ++k) {
      if (std::tolower(static_cast<unsigned char>(hay[i + k])) !=
          std::tolower(static_cast<unsigned char>(needle[k]))) {
        ok = false;
        break;
      }
    }
    if (ok) return i;
  }
  return std::string_view::npos;
}

// Locates the next "SubTask <n>:" marker at or after `from`; returns the
// offset just past the colon through `after`.
size_t FindMarker(std::string_view text, size_t from, size_t* after) {
  size_t pos = from;
  while ((pos = FindNoCase(text, "subtask", pos)) != std::string_view::npos) {
    size_t i = pos + 7;
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    const size_t digits = i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
    if (i > digits) {
      while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
      if (i < text.size() && text[i] == ':') {
        *after = i + 1;
        return pos;
      }
    }
    pos += 7;
  }
  return std::string_view::npos;
}

std::string NowUtc() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

UrlParts SplitUrl(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("base URL lacks a scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  UrlParts parts;
  parts.origin = url.substr(0, slash);
  if (slash != std::string::npos) parts.prefix = url.substr(slash);
  while (!parts.prefix.empty() && parts.prefix.back() == '/') parts.prefix.pop_back();
  return parts;
}

}  // namespace

SubgoalSchedule::SubgoalSchedule(std::string task, std::vector<Subgoal> subgoals,
                                 Provenance provenance)
    : task_(std::move(task)),
      subgoals_(std::move(subgoals)),
      provenance_(std::move(provenance)) {
  for (int k = 0; k < K(); ++k) {
    for (Cell c : subgoals_[k].cells) index_.emplace(c, k + 1);
  }
}

std::optional<int> SubgoalSchedule::Find(Cell cell) const {
  const auto it = index_.find(cell);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string PromptRequest::Text() const {
  return instruction + "\n" + map_block + "\n" + response_format + "\n" +
         std::string(kHints);
}

PromptRequest BuildPrompt(std::string_view task_id, std::string_view map_text) {
  const TaskId task = ParseTaskId(task_id);
  PromptRequest req;
  req.response_format = std::string(kResponseFormat);
  switch (task) {
    case TaskId::kCliffWalking: {
      req.instruction =
          "You need to establish an ordered sub-task sequence for a "
          "CliffWalking Task, crossing a gridworld from Start State to Goal "
          "State while avoiding falling off a cliff. The map of maze is "
          "listed below:\n";
      const GridSpec g = CliffWalking();
      req.map_block =
          "The environment is a the " + std::to_string(g.height) + "x" +
          std::to_string(g.width) + " grid world.\n" +
          "The game starts with the player at location [" +
          std::to_string(g.start.row) + ", " + std::to_string(g.start.col) +
          "].\n" + "The goal located at [" + std::to_string(g.goal.row) + ", " +
          std::to_string(g.goal.col) + "].\n" +
          "A cliff runs along [3, 1..10].\n";
      break;
    }
    case TaskId::kFourRoom:
      req.instruction =
          "You need to establish an ordered sub-task sequence for a FourRoom "
          "Task to navigate from Start State to Goal State. The map of "
          "FourRoom is listed below:\n";
      req.map_block =
          MatrixBlock("FOUR_ROOM", ParseCellMatrix(map_text.empty()
                                                       ? std::string_view(FourRoomText())
                                                       : map_text)) +
          "\n" + std::string(kLegend);
      break;
    case TaskId::kUMaze:
    case TaskId::kMedium: {
      req.instruction =
          "You need to establish an ordered sub-task sequence for a Maze "
          "Navigation Task from Start State to Goal State. The map of maze is "
          "listed below:\n";
      const bool u = task == TaskId::kUMaze;
      const std::string_view builtin = u ? UMazeText() : MediumMazeText();
      req.map_block =
          MatrixBlock(u ? "U_MAZE" : "MEDIUM_MAZE",
                      ParseCellMatrix(map_text.empty() ? builtin : map_text)) +
          "\n" + std::string(kLegend);
      break;
    }
  }
  return req;
}

PlannerResponse FetchPlan(std::string_view task_id, const PromptRequest& request,
                          const EndpointConfig& config) {
  if (config.mode == EndpointConfig::Mode::kFixture) {
    const std::string name =
        config.fixture.empty() ? std::string(task_id) : config.fixture;
    return {std::string(FixtureResponse(name)),
            {Provenance::Kind::kFixture, name, ""}};
  }

  if (config.base_url.empty()) throw ConfigError("live planner needs a base URL");
  if (config.model.empty()) throw ConfigError("live planner needs a model name");
  const char* key = std::getenv(config.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw ConfigError("credential variable " + config.api_key_env + " is not set");
  }

  const UrlParts url = SplitUrl(config.base_url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(config.timeout_sec, 0);
  client.set_read_timeout(config.timeout_sec, 0);
  client.set_bearer_token_auth(key);

  nlohmann::json body = {
      {"model", config.model},
      {"temperature", config.temperature},
      {"messages", {{{"role", "user"}, {"content", request.Text()}}}},
  };
  const std::string payload = body.dump();

  std::string last_error;
  for (int attempt = 0; attempt <= config.retries; ++attempt) {
    if (attempt > 0 && config.backoff_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(config.backoff_ms * attempt));
    }
    auto res = client.Post(url.prefix + "/chat/completions", payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401 || res->status == 403) {
      throw AuthError("endpoint rejected credentials (HTTP " +
                      std::to_string(res->status) + ")");
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw TransportError("endpoint returned HTTP " + std::to_string(res->status));
    }
    if (res->body.empty()) throw EmptyCompletion("endpoint returned an empty body");
    std::string content;
    try {
      const auto reply = nlohmann::json::parse(res->body);
      const auto& msg = reply.at("choices").at(0).at("message").at("content");
      if (msg.is_string()) content = msg.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("malformed completion payload: ") + e.what());
    }
    if (Trim(content).empty()) throw EmptyCompletion("completion has no content");
    return {content, {Provenance::Kind::kLlm, config.model, NowUtc()}};
  }
  throw TransportError("planner endpoint unreachable after " +
                       std::to_string(config.retries + 1) + " attempts: " + last_error);
}

SubgoalSchedule ParseResponse(std::string_view raw) {
  // Blank out comment lines while keeping offsets stable for line numbers.
  std::string text(raw);
  {
    size_t start = 0;
    while (start < text.size()) {
      size_t end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      const size_t first = text.find_first_not_of(" \t", start);
      if (first < end && text[first] == '#') {
        std::fill(text.begin() + static_cast<long>(first),
                  text.begin() + static_cast<long>(end), ' ');
      }
      start = end + 1;
    }
  }
  auto line_of = [&](size_t pos) {
    return 1 + static_cast<int>(std::count(text.begin(),
                                           text.begin() + static_cast<long>(pos), '\n'));
  };

  std::vector<Subgoal> subgoals;
  size_t after = 0;
  size_t marker = FindMarker(text, 0, &after);
  if (marker == std::string::npos) {
    throw ParseError("no SubTask entries found", 1, Trim(text.substr(0, 40)));
  }
  while (marker != std::string::npos) {
    size_t next_after = 0;
    const size_t next = FindMarker(text, after, &next_after);
    const size_t end = next == std::string::npos ? text.size() : next;
    std::string_view body(text.data() + after, end - after);

    Subgoal sg;
    size_t i = body.find_first_not_of(" \t\r\n");
    size_t cursor = 0;
    if (i != std::string_view::npos) {
      const Quote q = QuoteAt(body, i);
      if (q.length > 0) {
        size_t close = std::string_view::npos;
        size_t close_len = 0;
        for (std::string_view c : q.closers) {
          const size_t p = body.find(c, i + q.length);
          if (p < close) {
            close = p;
            close_len = c.size();
          }
        }
        if (close == std::string_view::npos) {
          throw ParseError("unterminated subtask name", line_of(after + i),
                           Trim(body.substr(i, 40)));
        }
        sg.name = std::string(body.substr(i + q.length, close - i - q.length));
        cursor = close + close_len;
      } else {
        const size_t stop = FindNoCase(body, "containing", i);
        std::string name = Trim(body.substr(i, stop == std::string_view::npos
                                                   ? std::string_view::npos
                                                   : stop - i));
        while (!name.empty() && name.back() == ',') name.pop_back();
        sg.name = Trim(name);
        cursor = stop == std::string_view::npos ? body.size() : stop;
      }
    }
    const size_t states = FindNoCase(body, "containing states", cursor);
    if (states == std::string_view::npos) {
      throw ParseError("subtask lacks 'containing states'", line_of(marker),
                       sg.name);
    }
    size_t p = body.find(':', states);
    p = p == std::string_view::npos ? states + 17 : p + 1;
    while (p < body.size()) {
      if (body[p] != '(') {
        ++p;
        continue;
      }
      const size_t close = body.find(')', p);
      const size_t tok_end = close == std::string_view::npos ? body.size() : close + 1;
      const std::string_view token = body.substr(p, tok_end - p);
      const std::string_view inner =
          close == std::string_view::npos ? std::string_view{} : body.substr(p + 1, close - p - 1);
      const size_t comma = inner.find(',');
      int r = 0, c = 0;
      if (close == std::string_view::npos || comma == std::string_view::npos ||
          inner.find(',', comma + 1) != std::string_view::npos ||
          !ParseInt(inner.substr(0, comma), r) || !ParseInt(inner.substr(comma + 1), c)) {
        throw ParseError("malformed coordinate pair", line_of(after + p),
                         std::string(token));
      }
      sg.cells.push_back({r, c});
      p = tok_end;
    }
    subgoals.push_back(std::move(sg));
    marker = next;
    after = next_after;
  }
  return SubgoalSchedule("", std::move(subgoals));
}

std::string RenderResponse(const SubgoalSchedule& schedule) {
  std::string out = "{\n";
  for (int k = 0; k < schedule.K(); ++k) {
    const Subgoal& sg = schedule.subgoals()[k];
    const bool single = sg.name.find('\'') == std::string::npos;
    const char q = single ? '\'' : '"';
    out += "SubTask " + std::to_string(k + 1) + ": " + q + sg.name + q +
           ", containing states: \"";
    for (size_t i = 0; i < sg.cells.size(); ++i) {
      if (i) out += ", ";
      out += "(" + std::to_string(sg.cells[i].row) + "," +
             std::to_string(sg.cells[i].col) + ")";
    }
    out += "\"";
    out += k + 1 < schedule.K() ? ",\n" : "\n";
  }
  out += "}\n";
  return out;
}

std::string ValidationReport::Summary() const {
  std::ostringstream os;
  os << (accepted ? "accepted" : "rejected") << ": " << uncovered.size()
     << " uncovered, " << duplicates.size() << " duplicated, " << in_walls.size()
     << " in walls";
  if (!start_ok) os << ", h(start) != 1";
  if (!goal_ok) os << ", h(goal) != K";
  for (const auto& [cell, ks] : duplicates) {
    os << "; (" << cell.row << "," << cell.col << ") listed in subtasks";
    for (int k : ks) os << ' ' << k;
    os << " -> kept " << ks.front();
  }
  return os.str();
}

ValidationReport ValidateSchedule(const SubgoalSchedule& schedule,
                                  const CellMap& map) {
  ValidationReport report;
  const int K = schedule.K();

  std::map<Cell, std::vector<int>> listed;
  std::set<Cell> walls_seen;
  for (int k = 0; k < K; ++k) {
    for (Cell c : schedule.subgoals()[k].cells) {
      if (!map.InBounds(c) || map.IsWall(c)) {
        if (walls_seen.insert(c).second) report.in_walls.push_back(c);
        continue;
      }
      auto& ks = listed[c];
      if (ks.empty() || ks.back() != k + 1) ks.push_back(k + 1);
    }
  }
  for (const auto& [cell, ks] : listed) {
    if (ks.size() > 1) report.duplicates.emplace_back(cell, ks);
  }

  std::vector<Subgoal> repaired(static_cast<size_t>(K));
  std::set<Cell> placed;
  for (int k = 0; k < K; ++k) {
    repaired[k].name = schedule.subgoals()[k].name;
    for (Cell c : schedule.subgoals()[k].cells) {
      const auto it = listed.find(c);
      if (it == listed.end() || it->second.front() != k + 1) continue;
      if (placed.insert(c).second) repaired[k].cells.push_back(c);
    }
  }

  const std::vector<Cell> free = map.FreeCells();
  for (Cell c : free) {
    if (listed.count(c)) continue;
    report.uncovered.push_back(c);
    if (listed.empty()) continue;
    int best_d = std::numeric_limits<int>::max();
    int best_k = 0;
    for (const auto& [other, ks] : listed) {
      const int d = std::abs(other.row - c.row) + std::abs(other.col - c.col);
      const int k = ks.front();
      if (d < best_d || (d == best_d && k < best_k)) {
        best_d = d;
        best_k = k;
      }
    }
    repaired[best_k - 1].cells.push_back(c);
  }

  report.repaired = SubgoalSchedule(schedule.task(), std::move(repaired),
                                    schedule.provenance());
  const auto hs = report.repaired.Find(map.start);
  const auto hg = report.repaired.Find(map.goal);
  report.start_ok = hs.has_value() && *hs == 1;
  report.goal_ok = hg.has_value() && *hg == K;
  report.accepted = K >= 1 && report.start_ok && report.goal_ok;
  return report;
}

int ProgressIndex(const SubgoalSchedule& schedule, Cell cell) {
  const auto k = schedule.Find(cell);
  if (!k) {
    throw InvalidState("state (" + std::to_string(cell.row) + "," +
                       std::to_string(cell.col) + ") is outside the schedule map");
  }
  return *k;
}

int ProgressIndex(const SubgoalSchedule& schedule, const Environment& env,
                  const State& state) {
  return ProgressIndex(schedule, env.CellOfState(state));
}

std::string SaveSchedule(const SubgoalSchedule& schedule) {
  nlohmann::ordered_json doc;
  doc["format"] = "storl-schedule";
  doc["version"] = 1;
  doc["task"] = schedule.task();
  doc["K"] = schedule.K();
  auto subgoals = nlohmann::ordered_json::array();
  for (const Subgoal& sg : schedule.subgoals()) {
    std::string cells;
    for (size_t i = 0; i < sg.cells.size(); ++i) {
      if (i) cells += ' ';
      cells += std::to_string(sg.cells[i].row) + "," + std::to_string(sg.cells[i].col);
    }
    subgoals.push_back({{"name", sg.name}, {"cells", cells}});
  }
  doc["subgoals"] = std::move(subgoals);
  const Provenance& p = schedule.provenance();
  doc["provenance"] = {
      {"kind", p.kind == Provenance::Kind::kFixture ? "fixture" : "llm"},
      {"source", p.source},
      {"timestamp", p.timestamp},
  };
  return doc.dump(2) + "\n";
}

SubgoalSchedule LoadSchedule(std::string_view document) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(document);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("schedule document is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format") != "storl-schedule" || doc.at("version") != 1) {
      throw ConfigError("unsupported schedule format");
    }
    std::vector<Subgoal> subgoals;
    for (const auto& item : doc.at("subgoals")) {
      Subgoal sg;
      sg.name = item.at("name").get<std::string>();
      std::istringstream in(item.at("cells").get<std::string>());
      std::string pair;
      while (in >> pair) {
        const auto comma = pair.find(',');
        int r = 0, c = 0;
        if (comma == std::string::npos || !ParseInt(pair.substr(0, comma), r) ||
            !ParseInt(pair.substr(comma + 1), c)) {
          throw ConfigError("bad cell '" + pair + "' in schedule document");
        }
        sg.cells.push_back({r, c});
      }
      subgoals.push_back(std::move(sg));
    }
    if (static_cast<int>(subgoals.size()) != doc.at("K").get<int>()) {
      throw ConfigError("schedule K does not match its subgoal list");
    }
    const auto& prov = doc.at("provenance");
    Provenance p;
    p.kind = prov.at("kind") == "llm" ? Provenance::Kind::kLlm : Provenance::Kind::kFixture;
    p.source = prov.at("source").get<std::string>();
    p.timestamp = prov.at("timestamp").get<std::string>();
    return SubgoalSchedule(doc.at("task").get<std::string>(), std::move(subgoals), p);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("schedule document is malformed: ") + e.what());
  }
}

}  // namespace storl
