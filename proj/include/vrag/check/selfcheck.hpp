// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vrag::check {

struct CheckOutcome {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelfCheckOptions {
  // Multiplies every tolerance; 0 demands exact agreement, which the
  // finite-difference check can never meet (used to exercise the failure path).
  double tolerance_scale = 1.0;
  std::uint64_t seed = 20240601;
};

// Gradient check on tiny models, graph vs brute-force adjacency, graph layer
// and pooling vs dense oracles, Chamfer/SCS and AP vs naive loops.
std::vector<CheckOutcome> run_selfcheck(const SelfCheckOptions& options = {});

}  // namespace vrag::check
