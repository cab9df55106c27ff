#pragma once

#include <compare>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace storl {

// Grid coordinates, row-major with (0,0) in the upper-left corner.
struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
};

using DiscreteState = Cell;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

struct KinematicState {
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  bool operator==(const KinematicState&) const = default;
};

// The enumeration order doubles as the deterministic tie-break order.
enum class Move : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
inline constexpr int kNumMoves = 4;

struct Force {
  double fx = 0.0;
  double fy = 0.0;
  bool operator==(const Force&) const = default;
};

using State = std::variant<DiscreteState, KinematicState>;
using Action = std::variant<Move, Force>;

enum class TaskId { kCliffWalking, kFourRoom, kUMaze, kMedium };

TaskId ParseTaskId(std::string_view name);
std::string_view TaskName(TaskId task);
bool IsGridTask(TaskId task);

struct GridSpec {
  int width = 0;
  int height = 0;
  std::set<Cell> walls;
  std::set<Cell> cliff;
  Cell start;
  Cell goal;
  int horizon = 100;
  double gamma = 0.99;

  bool InBounds(Cell c) const {
    return c.row >= 0 && c.col >= 0 && c.row < height && c.col < width;
  }
  bool IsWall(Cell c) const { return walls.count(c) > 0; }
};

enum class CellKind : char { kPath = '0', kWall = '1', kStart = 'r', kGoal = 'g' };

// Cell matrix of a maze. Rows index downward, columns to the right.
using CellMatrix = std::vector<std::vector<CellKind>>;

// Parses the {0,1,r,g} map alphabet, one row per line. Cells may be separated
// by whitespace, commas, or '&'; blank lines are skipped.
CellMatrix ParseCellMatrix(std::string_view text);
std::string RenderCellMatrix(const CellMatrix& cells);

struct MazeSpec {
  CellMatrix cells;
  Vec2 start_center;
  Vec2 goal_center;
  Vec2 noise_std{0.25, 0.25};
  double goal_radius = 0.5;
  double ball_radius = 0.1;
  int horizon = 200;
  double gamma = 0.996;
  double dt = 0.1;
  double max_speed = 2.0;

  int rows() const { return static_cast<int>(cells.size()); }
  int cols() const { return rows() == 0 ? 0 : static_cast<int>(cells[0].size()); }
};

// Unit-cell geometry: cell (i, j) is centred at
// x = j + 0.5 - cols/2, y = rows/2 - i - 0.5.
Vec2 CellCenter(const MazeSpec& spec, Cell cell);
Cell CellOf(const MazeSpec& spec, double x, double y);
bool IsWallAt(const MazeSpec& spec, Cell cell);

// Wall/start/goal layout shared by grid and maze tasks; the planner and the
// encoders work on this view.
struct CellMap {
  int height = 0;
  int width = 0;
  std::vector<bool> wall;  // row-major
  Cell start;
  Cell goal;

  bool InBounds(Cell c) const {
    return c.row >= 0 && c.col >= 0 && c.row < height && c.col < width;
  }
  bool IsWall(Cell c) const { return wall[c.row * width + c.col]; }
  std::vector<Cell> FreeCells() const;
};

CellMap ToCellMap(const GridSpec& spec);
CellMap ToCellMap(const MazeSpec& spec);

GridSpec CliffWalking();
GridSpec FourRoom();
MazeSpec UMaze();
MazeSpec MediumMaze();

// Map matrices as shown to the planner.
std::string_view UMazeText();
std::string_view MediumMazeText();
std::string FourRoomText();

struct GridStepResult {
  Cell next;
  double reward = 0.0;
  bool done = false;
};

// Blocked moves are self-transitions; entering the cliff resets to start.
GridStepResult GridStep(const GridSpec& spec, Cell s, Move a);

struct KinematicStepResult {
  KinematicState next;
  double reward = 0.0;
  bool done = false;
};

KinematicStepResult KinematicStep(const MazeSpec& spec,
                                  const KinematicState& s, Force force,
                                  Vec2 goal);

struct Transition {
  State state;
  Action action;
  State next_state;
  double reward = 0.0;
  int t = 0;
  bool done = false;          // goal reached or horizon cut
  bool reached_goal = false;  // done because the goal was reached
};

struct Trajectory {
  std::vector<Transition> steps;
  bool success = false;
  Vec2 goal;  // sampled goal position; unused by grid tasks
};

struct EpisodeStart {
  State state;
  Vec2 goal;
};

// A task instance: the spec plus a uniform step/reset surface.
class Environment {
 public:
  Environment(TaskId task, GridSpec spec);
  Environment(TaskId task, MazeSpec spec);

  static Environment Make(TaskId task);

  TaskId task() const { return task_; }
  bool discrete() const { return std::holds_alternative<GridSpec>(spec_); }
  const GridSpec& grid() const { return std::get<GridSpec>(spec_); }
  const MazeSpec& maze() const { return std::get<MazeSpec>(spec_); }
  int horizon() const;
  double gamma() const;
  const CellMap& cell_map() const { return cell_map_; }

  EpisodeStart Reset(std::mt19937_64& rng) const;

  struct StepResult {
    State next;
    double reward = 0.0;
    bool done = false;
  };
  StepResult Step(const State& s, const Action& a, Vec2 goal) const;

  // Cell under the state; continuous positions are floored to unit cells.
  Cell CellOfState(const State& s) const;

 private:
  TaskId task_;
  std::variant<GridSpec, MazeSpec> spec_;
  CellMap cell_map_;
};

// Maze start: centre + Gaussian noise, re-sampled until it lands on a
// non-wall cell. Velocities are zero.
KinematicState SampleMazeStart(const MazeSpec& spec, std::mt19937_64& rng);
Vec2 SampleMazeGoal(const MazeSpec& spec, std::mt19937_64& rng);

}  // namespace storl
