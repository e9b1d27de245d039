// SPDX-License-Identifier: Apache-2.0
//
// Triplet-margin training: loss, exact reverse-mode gradients through the
// whole network, hard-negative triplet mining and the epoch loop.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vrag/features.hpp"
#include "vrag/model.hpp"
#include "vrag/optimizer.hpp"
#include "vrag/similarity.hpp"

namespace vrag {

// max(0, c(v, v-) - c(v, v+) + margin)
double triplet_loss(const Embedding& anchor, const Embedding& positive, const Embedding& negative,
                    double margin);

struct TripletLossGrad {
  double loss = 0;
  Embedding anchor, positive, negative;  // dL/dv for each embedding
};

TripletLossGrad triplet_loss_grad(const Embedding& anchor, const Embedding& positive,
                                  const Embedding& negative, double margin);

// Adds dL/dparams for one forward pass, given dL/d(embedding).
void accumulate_gradients(const ForwardTrace& trace, const RowVector& grad_embedding,
                          GradientSet& grads);

// Gradients of the triplet loss over three traces of the same parameters.
// Throws kInvalidArgument when a trace was produced by other parameters.
GradientSet backward(const ModelParams& params, const ForwardTrace& anchor,
                     const ForwardTrace& positive, const ForwardTrace& negative, double margin);

// Inclusive 1-based frame range.
struct ClipWindow {
  std::size_t first = 1;
  std::size_t last = 1;
  friend bool operator==(const ClipWindow&, const ClipWindow&) = default;
};

struct Triplet {
  std::size_t anchor = 0, positive = 0, negative = 0;  // corpus indices
  ClipWindow anchor_clip, positive_clip, negative_clip;
  friend bool operator==(const Triplet&, const Triplet&) = default;
};

inline constexpr std::size_t kDefaultMaxClipFrames = 64;

// Crops every video to a random window of at most `max_clip_frames`, embeds
// the clips with `params`, and for every ordered same-group (anchor, positive)
// pair ranks the foreign-group videos by c(anchor, negative). Triplets are
// emitted hardest-first, one negative rank at a time across all pairs, until
// `pool_size` triplets exist or every combination is used. Deterministic in
// `seed`; throws kInvalidArgument with fewer than two groups or no pairs.
std::vector<Triplet> mine_triplets(std::span<const LabeledVideo> corpus, const ModelParams& params,
                                   std::size_t pool_size, std::uint64_t seed,
                                   std::size_t max_clip_frames = kDefaultMaxClipFrames);

struct TrainConfig {
  double margin = 0.2;
  AdamConfig adam;
  std::size_t epochs = 120;
  std::size_t triplets_per_pool = 1000;
  std::size_t pools = 2;
  std::size_t max_clip_frames = kDefaultMaxClipFrames;
  std::uint64_t seed = 0;
  // Written after every epoch when non-empty (parameters + optimizer state).
  std::filesystem::path checkpoint;
};

void validate(const TrainConfig& config);

struct LossRecord {
  std::size_t epoch = 0;      // 1-based
  std::size_t iteration = 0;  // 1-based within the epoch
  double loss = 0;
};

struct TrainResult {
  ModelParams params;
  std::vector<LossRecord> history;
  std::vector<double> epoch_mean_loss;
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

TrainResult train(std::span<const LabeledVideo> corpus, ModelParams params, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// `epoch,iteration,loss` with a header line.
void write_loss_csv(std::span<const LossRecord> history, const std::filesystem::path& path);

}  // namespace vrag
