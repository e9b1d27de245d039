// SPDX-License-Identifier: Apache-2.0
#include "vrag/optimizer.hpp"

#include <cmath>
#include <vector>

#include "vrag/error.hpp"

namespace vrag {

AdamState make_adam_state(const ModelConfig& config) {
  return AdamState{0, zeros_like(config), zeros_like(config)};
}

void adam_step(ModelParams& params, const GradientSet& grads, AdamState& state,
               const AdamConfig& config) {
  if (!(params.config == grads.config) || !(params.config == state.first_moment.config)) {
    throw Error(ErrorCode::kShapeMismatch, "parameters, gradients and optimizer state disagree");
  }
  std::vector<std::span<double>> p, m, v;
  std::vector<std::span<const double>> g;
  for_each_tensor(params, [&](std::string_view, std::span<double> t) { p.push_back(t); });
  for_each_tensor(grads, [&](std::string_view, std::span<const double> t) { g.push_back(t); });
  for_each_tensor(state.first_moment, [&](std::string_view, std::span<double> t) { m.push_back(t); });
  for_each_tensor(state.second_moment, [&](std::string_view, std::span<double> t) { v.push_back(t); });

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k].size() != g[k].size()) {
      throw Error(ErrorCode::kShapeMismatch, "gradient tensor size differs from parameter");
    }
    for (std::size_t i = 0; i < p[k].size(); ++i) {
      m[k][i] = config.beta1 * m[k][i] + (1.0 - config.beta1) * g[k][i];
      v[k][i] = config.beta2 * v[k][i] + (1.0 - config.beta2) * g[k][i] * g[k][i];
      const double m_hat = m[k][i] / correction1;
      const double v_hat = v[k][i] / correction2;
      p[k][i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

}  // namespace vrag
