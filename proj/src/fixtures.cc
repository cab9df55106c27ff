// Planner responses bundled for offline runs and tests.

#include <string>
#include <string_view>
#include <vector>

#include "storl/errors.h"
#include "storl/planner.h"

namespace storl {

namespace {

constexpr std::string_view kCliffWalking = R"fx({
 SubTask 1: 'Navigate safely away from the start',
    containing states: "(3,0), (2,0)",
 SubTask 2: 'Move horizontally toward the goal while avoiding the cliff',
    containing states: "(0, 0), (0,1), (0,2), (0,3), (0,4), (0,5), (0,6), (0,7), (0,8), (0,9), (0,10), (0,11), (1,11), (1,10), (1,9), (1,8), (1,7), (1,6), (1,5), (1,4), (1,3), (1,2), (1,1), (1, 0), (2, 0), (2,1), (2,2), (2,3), (2,4),(2,5), (2,6), (2,7), (2,8), (2,9), (2,10) ",
 SubTask 3: 'Descend toward the goal once past the cliff',
    containing states: "(2, 11)",
 SubTask 4: 'Reach the goal precisely without stepping into the cliff',
    containing states: "(3,11)"
}
)fx";

constexpr std::string_view kUMaze = R"fx({
SubTask 1: "Move along top corridor", containing states: "(1,1), (1,2)",
SubTask 2: "Move down the vertical connector", containing states: " (1,3), (2,3), (3,3)",
SubTask 3: "Move to goal (left along bottom)", containing states: "(3,2), (3,1)
}
)fx";

constexpr std::string_view kFourRoom = R"fx({
 SubTask 1: 'Navigate Top-Left Room (Start Region)',
 containing states: [
 (0,0), (0,1), (0,2), (0,3), (0,4),
 (1,0), (1,1), (1,2), (1,3), (1,4),
 (2,0), (2,1), (2,2), (2,3), (2,4),
 (3,0), (3,1), (3,2), (3,3), (3,4),
 (4,0), (4,1), (4,2), (4,3), (4,4)
 ],

 SubTask 2: 'Traverse Middle Corridor and Two Corner Rooms (Top-Right + Bottom-Left)',
 containing states: [
 # corridor and openings
 (2,5), (8,5), (5,2), (5,8),
 # top-right room
 (0,6), (0,7), (0,8), (0,9), (0,10),
 (1,6), (1,7), (1,8), (1,9), (1,10),
 (2,6), (2,7), (2,8), (2,9), (2,10),
 (3,6), (3,7), (3,8), (3,9), (3,10),
 (4,6), (4,7), (4,8), (4,9), (4,10),
 # bottom-left room
 (6,0), (6,1), (6,2), (6,3), (6,4),
 (7,0), (7,1), (7,2), (7,3), (7,4),
 (8,0), (8,1), (8,2), (8,3), (8,4),
 (9,0), (9,1), (9,2), (9,3), (9,4),
 (10,0), (10,1), (10,2), (10,3), (10,4)
 ],

 SubTask 3: 'Move in Bottom-Right Room (Goal Region)',
 containing states: [
 (6,6), (6,7), (6,8), (6,9), (6,10),
 (7,6), (7,7), (7,8), (7,9), (7,10),
 (8,6), (8,7), (8,8), (8,9), (8,10),
 (9,6), (9,7), (9,8), (9,9), (9,10),
 (10,6), (10,7), (10,8), (10,9), (10,10)
 ]
}
)fx";

constexpr std::string_view kMedium = R"fx({
SubTask 1: 'Move from start and sweep left column', containing states: "(1,1), (1,2), (2,2), (2,1), (4,1), (5,1), (6,1), (6,2), (6,3)",
SubTask 2: 'Move to central cluster and clear center', containing states: "(5,3), (5,4), (4,4), (3,4), (3,3), (3,2), (4,2)",
SubTask 3: 'Move to upper-right corridor', containing states: "(2,4), (2,5), (2,6), (1,6), (1,5)",
SubTask 4: 'Sweep right-bottom and finish at goal', containing states: "(4,5), (4,6), (5,6), (6,6), (6,5)"
}
)fx";

// Two responses from other models; each routes through a dead-end corridor.
constexpr std::string_view kMediumExample1 = R"fx({ SubTask 1: ‘Move to left corridor’,
containing states: “(1, 1), (1, 2), (2, 1), (2, 2), (3, 2), (4, 1), (4, 2), (5, 1), (6, 1), (6, 2), (6, 3)”,
SubTask 2: ‘Move to central area’, containing states: “(3, 3), (3, 4), (4, 4), (5, 3), (5, 4)”,
SubTask 3: ‘Move to upper right area’,
containing states: “(1, 5), (1, 6), (2, 4), (2, 5), (2, 6)”,
SubTask 4: ‘Move to goal’,
containing states: “(4, 5), (4, 6), (5, 6), (6, 5), (6, 6)”
}
)fx";

constexpr std::string_view kMediumExample2 = R"fx({
SubTask 1: ‘Move to start area junction’, containing states: “(1,1), (1,2), (2,1), (2,2)”,
SubTask 2: ‘Move to upper right corridor’, containing states: “(1,5), (1,6), (2,4), (2,5), (2,6)”,
SubTask 3: ‘Move to central corridor & lower left area’, containing states: “(3,2), (3,3), (3,4), (4,1), (4,2), (5,1), (6,1), (6,2), (6,3), (5,3), (5,4)”,
SubTask 4: ‘Move to lower right corridor’, containing states: “(4,4), (4,5), (4,6), (5,6), (6,6)”,
SubTask 5: ‘Move to goal’, containing states: “(6,5)”
}
)fx";

}  // namespace

std::vector<std::string> FixtureNames() {
  return {"cliffwalking", "fourroom",        "umaze",
          "medium",       "medium_example1", "medium_example2"};
}

std::string_view FixtureResponse(std::string_view name) {
  if (name == "cliffwalking") return kCliffWalking;
  if (name == "fourroom") return kFourRoom;
  if (name == "umaze") return kUMaze;
  if (name == "medium") return kMedium;
  if (name == "medium_example1") return kMediumExample1;
  if (name == "medium_example2") return kMediumExample2;
  throw ConfigError("unknown fixture '" + std::string(name) + "'");
}

}  // namespace storl
