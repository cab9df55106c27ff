#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "storl/env.h"

namespace storl {

// 64-bit FNV-1a; used for config, dataset, and schedule digests.
std::uint64_t Fnv1a64(std::string_view bytes);
std::string HexDigest(std::string_view bytes);

// Shortest decimal form that parses back to the same double.
std::string FormatDouble(double v);
double ParseDouble(std::string_view s);

struct ShapingHeader {
  double gamma = 0.0;
  int horizon = 0;
  std::string schedule_digest;
  std::string source_digest;
  bool operator==(const ShapingHeader&) const = default;
};

struct Dataset {
  TaskId task = TaskId::kCliffWalking;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::vector<Trajectory> trajectories;
  std::optional<ShapingHeader> shaping;  // set on shaped datasets

  size_t TransitionCount() const;
};

// Line-oriented text format: a header block, then one transition per line.
std::string SerializeDataset(const Dataset& dataset);
Dataset DeserializeDataset(std::string_view text);

std::string DatasetDigest(const Dataset& dataset);

}  // namespace storl
