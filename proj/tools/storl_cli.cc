// storl: plan | gen-data | augment | train | eval | verify
//
// Exit codes: 0 ok, 1 configuration error, 2 runtime error.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "storl/commands.h"
#include "storl/config.h"
#include "storl/errors.h"

int main(int argc, char** argv) {
  CLI::App app{"Subgoal-ordered reward shaping for offline RL"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  std::string config_path;
  std::vector<std::string> overrides;
  std::string task;
  std::string method;
  std::string seed;
  app.add_option("-c,--config", config_path, "JSON run configuration");
  app.add_option("--set", overrides, "Override a config key, e.g. learner.iterations=500");
  app.add_option("--task", task, "cliffwalking | fourroom | umaze | medium");
  app.add_option("--method", method, "storl | iql | gcbc");
  app.add_option("--seed", seed, "Run seed");
  const std::map<std::string, std::string> help{
      {"plan", "Fetch, parse and repair the subgoal schedule"},
      {"gen-data", "Generate the offline dataset (expert/random mixture)"},
      {"augment", "Rewrite dataset rewards with the shaped reward"},
      {"train", "Train storl, iql or gcbc; writes checkpoint, curve, value map"},
      {"eval", "Evaluate a checkpoint"},
      {"verify", "Run the shaping theorem checks"}};
  for (const auto& name : storl::CommandNames()) app.add_subcommand(name, help.at(name));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (!task.empty()) overrides.insert(overrides.begin(), "task=\"" + task + "\"");
  if (!method.empty()) overrides.insert(overrides.begin(), "method=\"" + method + "\"");
  if (!seed.empty()) overrides.insert(overrides.begin(), "seed=" + seed);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const storl::RunConfig config = storl::LoadRunConfig(config_path, overrides);
    std::cout << storl::RunCommand(command, config) << std::endl;
    return 0;
  } catch (const storl::ConfigError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
}
