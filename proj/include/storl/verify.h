#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace storl {

struct VerifyOptions {
  double gamma = 0.999;
  int horizon = 100;
  int samples = 100000;      // randomized tuples for theorems 1, 2 and lemma 1
  int pairs = 1000;          // trajectory pairs for theorem 3
  int trajectories = 1000;   // random trajectories for the telescoping identity
  std::uint64_t seed = 0;
  double tolerance = 1e-9;
};

struct TheoremCheck {
  std::string name;
  long cases = 0;
  long failures = 0;
  double worst = 0.0;  // largest absolute error where a comparison is made
  std::string detail;  // first failure, or notes
  bool passed() const { return cases > 0 && failures == 0; }
};

struct TheoremReport {
  std::vector<TheoremCheck> checks;
  bool passed() const;
  std::string Json() const;
};

// Randomized sweeps over the shaping identities plus expert rollouts shaped
// with the bundled planner fixtures.
TheoremReport RunTheoremSuite(const VerifyOptions& options);

}  // namespace storl
