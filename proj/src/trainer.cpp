// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <iomanip>

#include "vrag/error.hpp"
#include "vrag/training.hpp"

namespace vrag {
namespace {

RegionFeatureTensor clip_of(const RegionFeatureTensor& f, const ClipWindow& w) {
  if (w.first == 1 && w.last == f.frames()) return f;
  return slice_frames(f, w.first, w.last);
}

// Distinct, reproducible seed per (epoch, pool).
std::uint64_t pool_seed(std::uint64_t seed, std::size_t epoch, std::size_t pool) {
  std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL * (epoch * 1000003ULL + pool + 1));
  x ^= x >> 31;
  x *= 0xbf58476d1ce4e5b9ULL;
  return x ^ (x >> 29);
}

}  // namespace

void validate(const TrainConfig& c) {
  if (!(c.margin >= 0)) throw Error(ErrorCode::kInvalidArgument, "margin must be >= 0");
  if (!(c.adam.learning_rate > 0)) throw Error(ErrorCode::kInvalidArgument, "learning rate must be > 0");
  if (!(c.adam.beta1 >= 0 && c.adam.beta1 < 1 && c.adam.beta2 >= 0 && c.adam.beta2 < 1)) {
    throw Error(ErrorCode::kInvalidArgument, "Adam betas must lie in [0, 1)");
  }
  if (!(c.adam.epsilon > 0)) throw Error(ErrorCode::kInvalidArgument, "Adam epsilon must be > 0");
  if (c.pools < 1 || c.triplets_per_pool < 1 || c.max_clip_frames < 1) {
    throw Error(ErrorCode::kInvalidArgument, "pools, triplets per pool and clip length must be >= 1");
  }
}

TrainResult train(std::span<const LabeledVideo> corpus, ModelParams params, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  validate(config);
  validate(params);
  TrainResult result;
  AdamState state = make_adam_state(params.config);
  ForwardTrace anchor, positive, negative;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    double total = 0;
    std::size_t iteration = 0;
    for (std::size_t pool = 0; pool < config.pools; ++pool) {
      const auto triplets = mine_triplets(corpus, params, config.triplets_per_pool,
                                          pool_seed(config.seed, epoch, pool), config.max_clip_frames);
      for (const auto& t : triplets) {
        embed_video(params, clip_of(corpus[t.anchor].features, t.anchor_clip), &anchor);
        embed_video(params, clip_of(corpus[t.positive].features, t.positive_clip), &positive);
        embed_video(params, clip_of(corpus[t.negative].features, t.negative_clip), &negative);
        const double loss = triplet_loss(anchor.head.embedding.transpose(),
                                         positive.head.embedding.transpose(),
                                         negative.head.embedding.transpose(), config.margin);
        const GradientSet grads = backward(params, anchor, positive, negative, config.margin);
        adam_step(params, grads, state, config.adam);
        result.history.push_back({epoch, ++iteration, loss});
        total += loss;
      }
    }
    const double mean = iteration > 0 ? total / static_cast<double>(iteration) : 0.0;
    result.epoch_mean_loss.push_back(mean);
    if (!config.checkpoint.empty()) save_params(params, config.checkpoint, &state);
    if (on_epoch) on_epoch(epoch, mean);
  }
  result.params = std::move(params);
  return result;
}

void write_loss_csv(std::span<const LossRecord> history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "epoch,iteration,loss\n" << std::setprecision(17);
  for (const auto& r : history) out << r.epoch << ',' << r.iteration << ',' << r.loss << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace vrag
