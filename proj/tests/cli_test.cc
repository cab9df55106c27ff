#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "storl/commands.h"
#include "storl/config.h"
#include "storl/errors.h"
#include "storl/harness.h"
#include "storl/shaping.h"

namespace storl {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

TEST(Config, DefaultsFollowTask) {
  const RunConfig grid = ParseRunConfig(Json::object());
  EXPECT_EQ(grid.task, TaskId::kCliffWalking);
  EXPECT_EQ(grid.gamma, 0.99);
  EXPECT_EQ(grid.horizon, 100);
  EXPECT_EQ(grid.expert_prob, 0.5);
  EXPECT_EQ(grid.learner.iterations, 1000);
  EXPECT_EQ(grid.eval_every, 10);
  const RunConfig maze = ParseRunConfig(Json{{"task", "umaze"}});
  EXPECT_EQ(maze.horizon, 200);
  EXPECT_EQ(maze.gamma, 0.996);
  EXPECT_EQ(maze.expert_prob, 0.3);
  EXPECT_EQ(maze.learner.iterations, 2000);
  EXPECT_EQ(ParseRunConfig(Json{{"task", "medium"}}).horizon, 500);
}

TEST(Config, OverridesParseAsJsonThenString) {
  const RunConfig c = ParseRunConfig(
      Json::object(), {"learner.iterations=50", "task=fourroom", "paths.dataset=x/y.txt",
                       "env.gamma=0.995", "method=\"iql\""});
  EXPECT_EQ(c.learner.iterations, 50);
  EXPECT_EQ(c.task, TaskId::kFourRoom);
  EXPECT_EQ(c.paths.dataset, "x/y.txt");
  EXPECT_EQ(c.gamma, 0.995);
  EXPECT_EQ(c.method, Method::kIql);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(ParseRunConfig(Json{{"bogus", 1}}), ConfigError);
  EXPECT_THROW(ParseRunConfig(Json{{"learner", {{"depth", 3}}}}), ConfigError);
  EXPECT_THROW(ParseRunConfig(Json{{"schema_version", 2}}), ConfigError);
  EXPECT_THROW(ParseRunConfig(Json{{"seed", -1}}), ConfigError);
  EXPECT_THROW(ParseRunConfig(Json{{"learner", {{"batch_size", "big"}}}}), ConfigError);
  EXPECT_THROW(ParseRunConfig(Json::object(), {"learner"}), ConfigError);
  EXPECT_THROW(ParseRunConfig(Json::object(), {"learner=3"}), ConfigError);
  EXPECT_THROW(ParseRunConfig(Json::object(), {"env.gamma=1.5"}), ConfigError);
  EXPECT_THROW(ParseRunConfig(Json::object(), {"method=ppo"}), ConfigError);
  EXPECT_THROW(ParseRunConfig(Json::object(), {"planner.mode=live"}), ConfigError);
  EXPECT_THROW(LoadRunConfig("/nonexistent/config.json"), ConfigError);
}

TEST(Config, DocumentRoundTrip) {
  const RunConfig c = ParseRunConfig(Json{{"task", "fourroom"}, {"seed", 7}});
  const RunConfig back = ParseRunConfig(ToDocument(c));
  EXPECT_EQ(ToDocument(back).dump(), ToDocument(c).dump());
}

TEST(Config, DataDigestTracksGenerationSettings) {
  const RunConfig a = ParseRunConfig(Json::object());
  const RunConfig b = ParseRunConfig(Json::object(), {"learner.iterations=3"});
  const RunConfig c = ParseRunConfig(Json::object(), {"data.episodes=10"});
  EXPECT_EQ(DataConfigDigest(a), DataConfigDigest(b));
  EXPECT_NE(DataConfigDigest(a), DataConfigDigest(c));
}

// Runs the CLI in `dir`; returns the exit code and captures stdout/stderr.
struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliResult RunCli(const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && '" STORL_CLI_PATH "' " + args +
                          " > stdout.txt 2> stderr.txt";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = Slurp(dir / "stdout.txt");
  r.err = Slurp(dir / "stderr.txt");
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("storl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) +
            "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "config.json") << R"({
  "schema_version": 1,
  "data": {"episodes": 40},
  "learner": {"iterations": 30, "hidden": 16, "batch_size": 32},
  "eval": {"episodes": 5}
})";
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

const char* const kPipeline[] = {"plan", "gen-data", "augment", "train", "eval"};

TEST_F(CliTest, PipelineRunsAndReportsJson) {
  for (const char* cmd : kPipeline) {
    const CliResult r = RunCli(dir_, std::string(cmd) + " -c config.json");
    ASSERT_EQ(r.code, 0) << cmd << ": " << r.err;
    const Json j = Json::parse(r.out);
    EXPECT_EQ(j["command"], cmd);
  }
  for (const char* f : {"schedule.json", "dataset.txt", "shaped.txt", "model.ckpt", "curve.csv",
                        "value_map.csv", "report.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
  }
}

TEST_F(CliTest, RerunsAreByteIdentical) {
  std::map<std::string, std::string> first;
  for (int round = 0; round < 2; ++round) {
    for (const char* cmd : kPipeline) {
      ASSERT_EQ(RunCli(dir_, std::string(cmd) + " -c config.json").code, 0) << cmd;
    }
    for (const auto& e : fs::directory_iterator(dir_ / "out")) {
      const std::string name = e.path().filename().string();
      const std::string bytes = Slurp(e.path());
      if (round == 0) {
        first[name] = bytes;
      } else {
        EXPECT_EQ(bytes, first[name]) << name;
      }
    }
  }
  EXPECT_EQ(first.size(), 7u);
}

// The CLI pipeline must equal the same steps composed in-process.
TEST_F(CliTest, PipelineMatchesInProcess) {
  for (const char* cmd : {"plan", "gen-data", "augment", "train"}) {
    ASSERT_EQ(RunCli(dir_, std::string(cmd) + " -c config.json").code, 0) << cmd;
  }
  const RunConfig c = LoadRunConfig((dir_ / "config.json").string());
  const Environment env = MakeEnvironment(c);
  const auto report = ValidateSchedule(ParseResponse(FixtureResponse("cliffwalking")), env.cell_map());
  const auto expert = MakeExpert(env);
  GenerationConfig g;
  g.expert_prob = c.expert_prob;
  g.episodes = c.episodes;
  g.seed = c.seed;
  g.config_digest = DataConfigDigest(c);
  const Dataset ds = GenerateDataset(env, *expert, RandomPolicy(true), g);
  EXPECT_EQ(SerializeDataset(ds), Slurp(dir_ / "out/dataset.txt"));
  const Dataset shaped =
      AugmentDataset(ds, report.repaired, env, ShapingParams(c.gamma, c.horizon)).ToDataset();
  TrainOptions o;
  o.eval_every = c.eval_every;
  o.eval_episodes = c.eval_episodes;
  o.eval_seed = c.eval_seed;
  const TrainResult r = Train(Method::kStorl, env, shaped, nullptr, c.learner, c.seed, o);
  EXPECT_EQ(r.learner.SaveCheckpoint(env.task()), Slurp(dir_ / "out/model.ckpt"));
  EXPECT_EQ(CurveCsv(r.curve), Slurp(dir_ / "out/curve.csv"));
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(RunCli(dir_, "").code, 1);
  EXPECT_EQ(RunCli(dir_, "frobnicate").code, 1);
  const CliResult missing = RunCli(dir_, "augment -c config.json");
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("error:"), std::string::npos);
  EXPECT_EQ(RunCli(dir_, "train --set bogus=1").code, 1);
  EXPECT_EQ(RunCli(dir_, "plan -c nope.json").code, 1);
  // Live mode with an unreachable endpoint is a runtime failure.
  const CliResult live = RunCli(
      dir_, "plan --set planner.mode=live --set planner.base_url=http://127.0.0.1:1 "
            "--set planner.model=m --set planner.retries=0 --set planner.api_key_env=STORL_CLI_TEST_KEY");
  EXPECT_EQ(live.code, 1);  // no credential set: configuration problem
  setenv("STORL_CLI_TEST_KEY", "k", 1);
  const CliResult live2 = RunCli(
      dir_, "plan --set planner.mode=live --set planner.base_url=http://127.0.0.1:1 "
            "--set planner.model=m --set planner.retries=0 --set planner.api_key_env=STORL_CLI_TEST_KEY");
  EXPECT_EQ(live2.code, 2);
  unsetenv("STORL_CLI_TEST_KEY");
}

TEST_F(CliTest, FlagsOverrideConfig) {
  ASSERT_EQ(RunCli(dir_, "plan --task fourroom").code, 0);
  EXPECT_NE(Slurp(dir_ / "out/schedule.json").find("fourroom"), std::string::npos);
  ASSERT_EQ(RunCli(dir_, "gen-data -c config.json --task fourroom --seed 4").code, 0);
  const Dataset ds = DeserializeDataset(Slurp(dir_ / "out/dataset.txt"));
  EXPECT_EQ(ds.task, TaskId::kFourRoom);
  EXPECT_EQ(ds.seed, 4u);
  EXPECT_EQ(ds.trajectories.size(), 40u);
}

TEST_F(CliTest, StorlNeedsShapedData) {
  ASSERT_EQ(RunCli(dir_, "gen-data -c config.json").code, 0);
  EXPECT_EQ(RunCli(dir_, "train -c config.json --set paths.shaped=out/dataset.txt").code, 1);
}

TEST_F(CliTest, VerifySmall) {
  const CliResult r = RunCli(dir_, "verify --set verify.samples=1000 --set verify.pairs=50");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(Json::parse(r.out)["passed"], true);
  EXPECT_EQ(RunCli(dir_, "verify --set verify.gamma=0.99").code, 1);
}

TEST(Commands, UnknownNameIsConfigError) {
  EXPECT_THROW(RunCommand("dance", ParseRunConfig(Json::object())), ConfigError);
  EXPECT_EQ(CommandNames().size(), 6u);
}

}  // namespace
}  // namespace storl
