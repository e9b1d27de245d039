// SPDX-License-Identifier: Apache-2.0
#include "vrag/check/gradcheck.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "vrag/training.hpp"

namespace vrag::check {
namespace {

RegionFeatureTensor random_tensor(std::mt19937_64& rng, const std::string& id, std::size_t frames,
                                  std::size_t regions, std::size_t channels) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<float> data(frames * regions * channels);
  for (auto& v : data) v = static_cast<float>(dist(rng));
  return RegionFeatureTensor(id, frames, regions, channels, std::move(data));
}

double loss_of(const TinyInstance& s, const ModelParams& params) {
  return triplet_loss(embed_video(params, s.anchor), embed_video(params, s.positive),
                      embed_video(params, s.negative), s.margin);
}

}  // namespace

TinyInstance random_tiny_instance(std::uint64_t seed, bool active) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  ModelConfig config;
  config.input_dims = pick(2, 4);
  config.hidden_dims = pick(2, 3);
  config.layers = pick(1, 2);
  config.embedding_dims = pick(2, 3);
  TinyInstance s;
  s.params = init_params(config, seed * 7919 + 1);
  std::uniform_real_distribution<double> bias(-0.5, 0.5);
  for (auto* b : {&s.params.reduce_bias, &s.params.attention_bias, &s.params.hidden_bias, &s.params.output_bias}) {
    for (Eigen::Index i = 0; i < b->size(); ++i) (*b)[i] = bias(rng);
  }
  for (auto& layer : s.params.layers) {
    for (auto* b : {&layer.query_bias, &layer.key_bias, &layer.output_bias}) {
      for (Eigen::Index i = 0; i < b->size(); ++i) (*b)[i] = bias(rng);
    }
  }
  const std::size_t regions = pick(1, 2);
  s.anchor = random_tensor(rng, "a", pick(1, 3), regions, config.input_dims);
  s.positive = random_tensor(rng, "p", pick(1, 3), regions, config.input_dims);
  s.negative = random_tensor(rng, "n", pick(1, 3), regions, config.input_dims);

  const auto a = embed_video(s.params, s.anchor);
  const double gap = cosine_similarity(a, embed_video(s.params, s.negative)) -
                     cosine_similarity(a, embed_video(s.params, s.positive));
  // Keep the hinge argument at least 0.1 away from the kink.
  s.margin = active ? std::max(0.0, -gap) + 0.3 : 0.0;
  if (!active && gap > -0.1) {
    // Make the instance inactive by construction: positive = anchor.
    s.positive = s.anchor;
    s.positive.set_video_id("p");
    s.margin = 0.0;
  }
  return s;
}

GradCheckResult check_triplet_gradients(const TinyInstance& s, double step, double rel_tol,
                                        double abs_floor) {
  GradCheckResult result;
  ForwardTrace ta, tp, tn;
  embed_video(s.params, s.anchor, &ta);
  embed_video(s.params, s.positive, &tp);
  embed_video(s.params, s.negative, &tn);
  const GradientSet analytic = backward(s.params, ta, tp, tn, s.margin);
  result.loss = loss_of(s, s.params);

  std::vector<std::pair<std::string, std::span<const double>>> grads;
  for_each_tensor(analytic, [&](std::string_view name, std::span<const double> t) {
    grads.emplace_back(std::string(name), t);
  });
  ModelParams probe = s.params;
  std::vector<std::span<double>> values;
  for_each_tensor(probe, [&](std::string_view, std::span<double> t) { values.push_back(t); });

  double worst_excess = -1;
  for (std::size_t k = 0; k < values.size(); ++k) {
    for (std::size_t i = 0; i < values[k].size(); ++i) {
      const double original = values[k][i];
      values[k][i] = original + step;
      const double up = loss_of(s, probe);
      values[k][i] = original - step;
      const double down = loss_of(s, probe);
      values[k][i] = original;
      const double numeric = (up - down) / (2 * step);
      const double exact = grads[k].second[i];
      const double err = std::abs(exact - numeric);
      const double allowed = std::max(abs_floor, rel_tol * std::max(std::abs(exact), std::abs(numeric)));
      ++result.checked;
      result.max_abs_error = std::max(result.max_abs_error, err);
      if (err > allowed) ++result.failures;
      if (err - allowed > worst_excess) {
        worst_excess = err - allowed;
        std::ostringstream desc;
        desc << grads[k].first << "[" << i << "] analytic=" << exact << " numeric=" << numeric;
        result.worst = desc.str();
      }
    }
  }
  return result;
}

}  // namespace vrag::check
