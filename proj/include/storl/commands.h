#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "storl/config.h"

namespace storl {

// Each command reads and writes the files named in config.paths and returns
// a one-line JSON summary. Errors are thrown; ConfigError means bad input.
std::string CmdPlan(const RunConfig& config);
std::string CmdGenData(const RunConfig& config);
std::string CmdAugment(const RunConfig& config);
std::string CmdTrain(const RunConfig& config);
std::string CmdEval(const RunConfig& config);
std::string CmdVerify(const RunConfig& config);

const std::vector<std::string>& CommandNames();
std::string RunCommand(std::string_view name, const RunConfig& config);

std::string ReadFile(const std::string& path, std::string_view what);
void WriteFile(const std::string& path, std::string_view contents);

}  // namespace storl
