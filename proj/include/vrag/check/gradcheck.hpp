// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "vrag/features.hpp"
#include "vrag/model.hpp"

namespace vrag::check {

struct TinyInstance {
  ModelParams params;
  RegionFeatureTensor anchor, positive, negative;
  double margin = 0.2;
};

// Random small model and triplet: C <= 4, C' <= 3, K <= 2, T <= 3, R <= 2,
// D <= 3, biases randomized. With `active` the margin is chosen so the hinge
// is strictly active with slack; otherwise strictly inactive.
TinyInstance random_tiny_instance(std::uint64_t seed, bool active);

struct GradCheckResult {
  std::size_t checked = 0;
  std::size_t failures = 0;
  double loss = 0;
  double max_abs_error = 0;
  std::string worst;  // description of the worst offender
};

// Compares backward() with central differences of the triplet loss for every
// scalar parameter. An entry passes when
//   |analytic - numeric| <= max(abs_floor, rel_tol * max(|analytic|, |numeric|)).
GradCheckResult check_triplet_gradients(const TinyInstance& instance, double step = 1e-5,
                                        double rel_tol = 1e-4, double abs_floor = 1e-8);

}  // namespace vrag::check
