#include "storl/dataset.h"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "storl/errors.h"

namespace storl {

namespace {

// Empty digests are written as "-" so header lines keep their field count.
std::string DigestToken(const std::string& d) { return d.empty() ? "-" : d; }
std::string FromDigestToken(std::string_view f) { return f == "-" ? std::string() : std::string(f); }

constexpr std::string_view kMagic = "# storl-dataset v1";

void AppendState(std::string& out, const State& s) {
  if (const Cell* c = std::get_if<Cell>(&s)) {
    out += std::to_string(c->row) + ' ' + std::to_string(c->col);
    return;
  }
  const auto& k = std::get<KinematicState>(s);
  out += FormatDouble(k.x) + ' ' + FormatDouble(k.y) + ' ' + FormatDouble(k.vx) +
         ' ' + FormatDouble(k.vy);
}

void AppendAction(std::string& out, const Action& a) {
  if (const Move* m = std::get_if<Move>(&a)) {
    out += std::to_string(static_cast<int>(*m));
    return;
  }
  const auto& f = std::get<Force>(a);
  out += FormatDouble(f.fx) + ' ' + FormatDouble(f.fy);
}

std::vector<std::string_view> Fields(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    const size_t b = i;
    while (i < line.size() && line[i] != ' ') ++i;
    if (i > b) out.push_back(line.substr(b, i - b));
  }
  return out;
}

long long ParseInteger(std::string_view s, int line) {
  long long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ParseError("expected an integer", line, std::string(s));
  }
  return v;
}

}  // namespace

std::uint64_t Fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string HexDigest(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(Fnv1a64(bytes)));
  return buf;
}

std::string FormatDouble(double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

double ParseDouble(std::string_view s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ParseError("expected a number", 0, std::string(s));
  }
  return v;
}

size_t Dataset::TransitionCount() const {
  size_t n = 0;
  for (const auto& traj : trajectories) n += traj.steps.size();
  return n;
}

std::string SerializeDataset(const Dataset& dataset) {
  const bool grid = IsGridTask(dataset.task);
  std::string out;
  out += kMagic;
  out += '\n';
  out += "env " + std::string(TaskName(dataset.task)) + '\n';
  out += "seed " + std::to_string(dataset.seed) + '\n';
  out += "config " + DigestToken(dataset.config_digest) + '\n';
  out += "trajectories " + std::to_string(dataset.trajectories.size()) + '\n';
  if (dataset.shaping) {
    const auto& s = *dataset.shaping;
    out += "shaping gamma " + FormatDouble(s.gamma) + " horizon " +
           std::to_string(s.horizon) + " schedule " + DigestToken(s.schedule_digest) +
           " source " + DigestToken(s.source_digest) + '\n';
  }
  out += grid ? "columns traj t row col action next_row next_col reward done goal\n"
              : "columns traj t x y vx vy fx fy next_x next_y next_vx next_vy "
                "goal_x goal_y reward done goal\n";
  for (size_t i = 0; i < dataset.trajectories.size(); ++i) {
    const Trajectory& traj = dataset.trajectories[i];
    for (const Transition& tr : traj.steps) {
      out += std::to_string(i) + ' ' + std::to_string(tr.t) + ' ';
      AppendState(out, tr.state);
      out += ' ';
      AppendAction(out, tr.action);
      out += ' ';
      AppendState(out, tr.next_state);
      if (!grid) {
        out += ' ' + FormatDouble(traj.goal.x) + ' ' + FormatDouble(traj.goal.y);
      }
      out += ' ' + FormatDouble(tr.reward) + ' ' + (tr.done ? '1' : '0') + ' ' +
             (tr.reached_goal ? '1' : '0') + '\n';
    }
  }
  return out;
}

Dataset DeserializeDataset(std::string_view text) {
  Dataset ds;
  size_t pos = 0;
  int line_no = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    return true;
  };

  std::string_view line;
  if (!next_line(line) || line != kMagic) {
    throw ParseError("not a dataset file", 1, std::string(line.substr(0, 32)));
  }
  size_t declared = 0;
  bool have_columns = false;
  while (!have_columns && next_line(line)) {
    const auto f = Fields(line);
    if (f.empty()) continue;
    if (f[0] == "env" && f.size() == 2) {
      ds.task = ParseTaskId(f[1]);
    } else if (f[0] == "seed" && f.size() == 2) {
      ds.seed = static_cast<std::uint64_t>(ParseInteger(f[1], line_no));
    } else if (f[0] == "config" && f.size() == 2) {
      ds.config_digest = FromDigestToken(f[1]);
    } else if (f[0] == "trajectories" && f.size() == 2) {
      declared = static_cast<size_t>(ParseInteger(f[1], line_no));
    } else if (f[0] == "shaping" && f.size() == 9) {
      ShapingHeader s;
      s.gamma = ParseDouble(f[2]);
      s.horizon = static_cast<int>(ParseInteger(f[4], line_no));
      s.schedule_digest = FromDigestToken(f[6]);
      s.source_digest = FromDigestToken(f[8]);
      ds.shaping = s;
    } else if (f[0] == "columns") {
      have_columns = true;
    } else {
      throw ParseError("unknown header line", line_no, std::string(line));
    }
  }
  if (!have_columns) throw ParseError("missing columns line", line_no, "");

  const bool grid = IsGridTask(ds.task);
  const size_t width = grid ? 10 : 17;
  ds.trajectories.resize(declared);
  while (next_line(line)) {
    if (line.empty()) continue;
    const auto f = Fields(line);
    if (f.size() != width) throw ParseError("wrong field count", line_no, std::string(line));
    const auto id = static_cast<size_t>(ParseInteger(f[0], line_no));
    if (id >= declared) throw ParseError("trajectory id out of range", line_no, std::string(f[0]));
    Transition tr;
    tr.t = static_cast<int>(ParseInteger(f[1], line_no));
    Trajectory& traj = ds.trajectories[id];
    if (tr.t != static_cast<int>(traj.steps.size())) {
      throw ParseError("non-consecutive timestep", line_no, std::string(f[1]));
    }
    if (grid) {
      tr.state = Cell{static_cast<int>(ParseInteger(f[2], line_no)),
                      static_cast<int>(ParseInteger(f[3], line_no))};
      const auto a = ParseInteger(f[4], line_no);
      if (a < 0 || a >= kNumMoves) throw ParseError("bad action", line_no, std::string(f[4]));
      tr.action = static_cast<Move>(a);
      tr.next_state = Cell{static_cast<int>(ParseInteger(f[5], line_no)),
                           static_cast<int>(ParseInteger(f[6], line_no))};
      tr.reward = ParseDouble(f[7]);
      tr.done = f[8] == "1";
      tr.reached_goal = f[9] == "1";
    } else {
      tr.state = KinematicState{ParseDouble(f[2]), ParseDouble(f[3]),
                                ParseDouble(f[4]), ParseDouble(f[5])};
      tr.action = Force{ParseDouble(f[6]), ParseDouble(f[7])};
      tr.next_state = KinematicState{ParseDouble(f[8]), ParseDouble(f[9]),
                                     ParseDouble(f[10]), ParseDouble(f[11])};
      traj.goal = {ParseDouble(f[12]), ParseDouble(f[13])};
      tr.reward = ParseDouble(f[14]);
      tr.done = f[15] == "1";
      tr.reached_goal = f[16] == "1";
    }
    traj.steps.push_back(tr);
  }
  for (auto& traj : ds.trajectories) {
    traj.success = !traj.steps.empty() && traj.steps.back().reached_goal;
  }
  return ds;
}

std::string DatasetDigest(const Dataset& dataset) {
  return HexDigest(SerializeDataset(dataset));
}

}  // namespace storl
