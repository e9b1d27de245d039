// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "vrag/model.hpp"

namespace vrag {

struct AdamConfig {
  double learning_rate = 3e-7;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::uint64_t step = 0;
  GradientSet first_moment;
  GradientSet second_moment;
};

AdamState make_adam_state(const ModelConfig& config);

// One bias-corrected Adam update in place. Zero gradients with zero moments
// leave the parameters bit-identical.
void adam_step(ModelParams& params, const GradientSet& grads, AdamState& state,
               const AdamConfig& config);

}  // namespace vrag
