#include "storl/env.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "storl/errors.h"

namespace storl {

namespace {

constexpr std::string_view kUMaze = R"(1 1 1 1 1
1 r 0 0 1
1 1 1 0 1
1 g 0 0 1
1 1 1 1 1
)";

constexpr std::string_view kMediumMaze = R"(1 1 1 1 1 1 1 1
1 r 0 1 1 0 0 1
1 0 0 1 0 0 0 1
1 1 0 0 0 1 1 1
1 0 0 1 0 0 0 1
1 0 1 0 0 1 0 1
1 0 0 0 1 g 0 1
1 1 1 1 1 1 1 1
)";

Cell Offset(Cell c, Move a) {
  switch (a) {
    case Move::kUp: return {c.row - 1, c.col};
    case Move::kDown: return {c.row + 1, c.col};
    case Move::kLeft: return {c.row, c.col - 1};
    case Move::kRight: return {c.row, c.col + 1};
  }
  throw InvalidAction("unknown move");
}

Cell FindKind(const CellMatrix& cells, CellKind kind) {
  for (int i = 0; i < static_cast<int>(cells.size()); ++i) {
    for (int j = 0; j < static_cast<int>(cells[i].size()); ++j) {
      if (cells[i][j] == kind) return {i, j};
    }
  }
  throw Error(std::string("map has no '") + static_cast<char>(kind) + "' cell");
}

MazeSpec MazeFromText(std::string_view text, int horizon, double gamma) {
  MazeSpec spec;
  spec.cells = ParseCellMatrix(text);
  spec.start_center = CellCenter(spec, FindKind(spec.cells, CellKind::kStart));
  spec.goal_center = CellCenter(spec, FindKind(spec.cells, CellKind::kGoal));
  spec.horizon = horizon;
  spec.gamma = gamma;
  return spec;
}

Vec2 SampleNear(const MazeSpec& spec, Vec2 center, std::mt19937_64& rng) {
  std::normal_distribution<double> nx(0.0, 1.0);
  for (;;) {
    Vec2 p{center.x + spec.noise_std.x * nx(rng),
           center.y + spec.noise_std.y * nx(rng)};
    if (!IsWallAt(spec, CellOf(spec, p.x, p.y))) return p;
  }
}

}  // namespace

TaskId ParseTaskId(std::string_view name) {
  if (name == "cliffwalking") return TaskId::kCliffWalking;
  if (name == "fourroom") return TaskId::kFourRoom;
  if (name == "umaze") return TaskId::kUMaze;
  if (name == "medium") return TaskId::kMedium;
  throw ConfigError("unknown task id '" + std::string(name) + "'");
}

std::string_view TaskName(TaskId task) {
  switch (task) {
    case TaskId::kCliffWalking: return "cliffwalking";
    case TaskId::kFourRoom: return "fourroom";
    case TaskId::kUMaze: return "umaze";
    case TaskId::kMedium: return "medium";
  }
  return "unknown";
}

bool IsGridTask(TaskId task) {
  return task == TaskId::kCliffWalking || task == TaskId::kFourRoom;
}

CellMatrix ParseCellMatrix(std::string_view text) {
  CellMatrix cells;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<CellKind> row;
    for (char ch : line) {
      switch (ch) {
        case '0': row.push_back(CellKind::kPath); break;
        case '1': row.push_back(CellKind::kWall); break;
        case 'r': row.push_back(CellKind::kStart); break;
        case 'g': row.push_back(CellKind::kGoal); break;
        case ' ': case '\t': case ',': case '&': case '\r': break;
        default:
          throw ParseError("unexpected map character", line_no,
                           std::string(1, ch));
      }
    }
    if (row.empty()) continue;
    if (!cells.empty() && row.size() != cells.front().size()) {
      throw ParseError("ragged map row", line_no, line);
    }
    cells.push_back(std::move(row));
  }
  if (cells.empty()) throw ParseError("empty map", line_no, "");
  return cells;
}

std::string RenderCellMatrix(const CellMatrix& cells) {
  std::string out;
  for (const auto& row : cells) {
    for (size_t j = 0; j < row.size(); ++j) {
      if (j) out += ' ';
      out += static_cast<char>(row[j]);
    }
    out += '\n';
  }
  return out;
}

Vec2 CellCenter(const MazeSpec& spec, Cell cell) {
  return {cell.col + 0.5 - spec.cols() / 2.0, spec.rows() / 2.0 - cell.row - 0.5};
}

Cell CellOf(const MazeSpec& spec, double x, double y) {
  return {static_cast<int>(std::floor(spec.rows() / 2.0 - y)),
          static_cast<int>(std::floor(x + spec.cols() / 2.0))};
}

bool IsWallAt(const MazeSpec& spec, Cell cell) {
  if (cell.row < 0 || cell.col < 0 || cell.row >= spec.rows() ||
      cell.col >= spec.cols()) {
    return true;
  }
  return spec.cells[cell.row][cell.col] == CellKind::kWall;
}

std::vector<Cell> CellMap::FreeCells() const {
  std::vector<Cell> out;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (!IsWall({r, c})) out.push_back({r, c});
    }
  }
  return out;
}

CellMap ToCellMap(const GridSpec& spec) {
  CellMap map;
  map.height = spec.height;
  map.width = spec.width;
  map.wall.assign(static_cast<size_t>(spec.height * spec.width), false);
  for (Cell w : spec.walls) map.wall[w.row * spec.width + w.col] = true;
  map.start = spec.start;
  map.goal = spec.goal;
  return map;
}

CellMap ToCellMap(const MazeSpec& spec) {
  CellMap map;
  map.height = spec.rows();
  map.width = spec.cols();
  map.wall.assign(static_cast<size_t>(map.height * map.width), false);
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      map.wall[r * map.width + c] = spec.cells[r][c] == CellKind::kWall;
    }
  }
  map.start = FindKind(spec.cells, CellKind::kStart);
  map.goal = FindKind(spec.cells, CellKind::kGoal);
  return map;
}

GridSpec CliffWalking() {
  GridSpec spec;
  spec.height = 4;
  spec.width = 12;
  for (int c = 1; c <= 10; ++c) spec.cliff.insert({3, c});
  spec.start = {3, 0};
  spec.goal = {3, 11};
  spec.horizon = 100;
  spec.gamma = 0.99;
  return spec;
}

GridSpec FourRoom() {
  GridSpec spec;
  spec.height = 11;
  spec.width = 11;
  for (int i = 0; i < 11; ++i) {
    spec.walls.insert({5, i});
    spec.walls.insert({i, 5});
  }
  for (Cell gap : {Cell{5, 2}, Cell{5, 8}, Cell{2, 5}, Cell{8, 5}}) {
    spec.walls.erase(gap);
  }
  spec.start = {0, 0};
  spec.goal = {10, 10};
  spec.horizon = 100;
  spec.gamma = 0.99;
  return spec;
}

MazeSpec UMaze() { return MazeFromText(kUMaze, 200, 0.996); }
MazeSpec MediumMaze() { return MazeFromText(kMediumMaze, 500, 0.999); }

std::string_view UMazeText() { return kUMaze; }
std::string_view MediumMazeText() { return kMediumMaze; }

std::string FourRoomText() {
  const GridSpec spec = FourRoom();
  std::string out;
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      if (c) out += ' ';
      const Cell cell{r, c};
      out += cell == spec.start ? 'r'
             : cell == spec.goal ? 'g'
             : spec.IsWall(cell) ? '1'
                                 : '0';
    }
    out += '\n';
  }
  return out;
}

GridStepResult GridStep(const GridSpec& spec, Cell s, Move a) {
  if (!spec.InBounds(s) || spec.IsWall(s)) {
    throw InvalidState("grid state (" + std::to_string(s.row) + "," +
                       std::to_string(s.col) + ") is a wall or off-grid");
  }
  Cell next = Offset(s, a);
  if (!spec.InBounds(next) || spec.IsWall(next)) next = s;
  if (spec.cliff.count(next)) return {spec.start, 0.0, false};
  if (next == spec.goal) return {next, 1.0, true};
  return {next, 0.0, false};
}

KinematicStepResult KinematicStep(const MazeSpec& spec,
                                  const KinematicState& s, Force force,
                                  Vec2 goal) {
  if (!std::isfinite(force.fx) || !std::isfinite(force.fy)) {
    throw InvalidAction("non-finite force");
  }
  const double fx = std::clamp(force.fx, -1.0, 1.0);
  const double fy = std::clamp(force.fy, -1.0, 1.0);
  const double dt = spec.dt;
  const double vmax = spec.max_speed;
  const double r = spec.ball_radius;

  KinematicState n = s;
  n.vx = std::clamp(s.vx + fx * dt, -vmax, vmax);
  n.vy = std::clamp(s.vy + fy * dt, -vmax, vmax);

  // x axis, then y axis. Displacement per step is below one cell, so only the
  // neighbouring cell along the motion direction can block.
  double x = s.x + n.vx * dt;
  if (n.vx != 0.0) {
    const double dir = n.vx > 0 ? 1.0 : -1.0;
    const Cell probe = CellOf(spec, x + dir * r, s.y);
    if (IsWallAt(spec, probe)) {
      const Cell here = CellOf(spec, s.x, s.y);
      const double face = CellCenter(spec, here).x + dir * 0.5;
      x = face - dir * r;
      n.vx = 0.0;
    }
  }
  n.x = x;

  double y = s.y + n.vy * dt;
  if (n.vy != 0.0) {
    const double dir = n.vy > 0 ? 1.0 : -1.0;
    const Cell probe = CellOf(spec, n.x, y + dir * r);
    if (IsWallAt(spec, probe)) {
      const Cell here = CellOf(spec, n.x, s.y);
      const double face = CellCenter(spec, here).y + dir * 0.5;
      y = face - dir * r;
      n.vy = 0.0;
    }
  }
  n.y = y;

  const double dist = std::hypot(n.x - goal.x, n.y - goal.y);
  if (dist < spec.goal_radius) return {n, 1.0, true};
  return {n, 0.0, false};
}

KinematicState SampleMazeStart(const MazeSpec& spec, std::mt19937_64& rng) {
  const Vec2 p = SampleNear(spec, spec.start_center, rng);
  return {p.x, p.y, 0.0, 0.0};
}

Vec2 SampleMazeGoal(const MazeSpec& spec, std::mt19937_64& rng) {
  return SampleNear(spec, spec.goal_center, rng);
}

Environment::Environment(TaskId task, GridSpec spec)
    : task_(task), spec_(std::move(spec)), cell_map_(ToCellMap(grid())) {}

Environment::Environment(TaskId task, MazeSpec spec)
    : task_(task), spec_(std::move(spec)), cell_map_(ToCellMap(maze())) {}

Environment Environment::Make(TaskId task) {
  switch (task) {
    case TaskId::kCliffWalking: return {task, CliffWalking()};
    case TaskId::kFourRoom: return {task, FourRoom()};
    case TaskId::kUMaze: return {task, UMaze()};
    case TaskId::kMedium: return {task, MediumMaze()};
  }
  throw ConfigError("unknown task");
}

int Environment::horizon() const {
  return discrete() ? grid().horizon : maze().horizon;
}

double Environment::gamma() const {
  return discrete() ? grid().gamma : maze().gamma;
}

EpisodeStart Environment::Reset(std::mt19937_64& rng) const {
  if (discrete()) return {grid().start, Vec2{}};
  const KinematicState s = SampleMazeStart(maze(), rng);
  return {s, SampleMazeGoal(maze(), rng)};
}

Environment::StepResult Environment::Step(const State& s, const Action& a,
                                          Vec2 goal) const {
  if (discrete()) {
    if (!std::holds_alternative<Cell>(s)) throw InvalidState("expected a grid state");
    if (!std::holds_alternative<Move>(a)) throw InvalidAction("expected a move");
    const auto r = GridStep(grid(), std::get<Cell>(s), std::get<Move>(a));
    return {r.next, r.reward, r.done};
  }
  if (!std::holds_alternative<KinematicState>(s)) {
    throw InvalidState("expected a kinematic state");
  }
  if (!std::holds_alternative<Force>(a)) throw InvalidAction("expected a force");
  const auto r = KinematicStep(maze(), std::get<KinematicState>(s),
                               std::get<Force>(a), goal);
  return {r.next, r.reward, r.done};
}

Cell Environment::CellOfState(const State& s) const {
  if (const Cell* c = std::get_if<Cell>(&s)) return *c;
  const auto& k = std::get<KinematicState>(s);
  return CellOf(maze(), k.x, k.y);
}

}  // namespace storl
