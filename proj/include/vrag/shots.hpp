// SPDX-License-Identifier: Apache-2.0
//
// Shot segmentation by consecutive-frame cosine similarity, and per-shot
// embeddings. Frames and shot indices are 1-based.
#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vrag/features.hpp"
#include "vrag/model.hpp"

namespace vrag {

inline constexpr double kDefaultShotThreshold = 0.75;

struct ShotRange {
  std::size_t start = 1;  // inclusive
  std::size_t end = 1;    // inclusive
  std::size_t length() const { return end - start + 1; }
  friend bool operator==(const ShotRange&, const ShotRange&) = default;
};

struct ShotSet {
  std::string video_id;
  std::vector<std::size_t> boundaries;  // shot start frames, always begins with 1
  std::vector<ShotRange> shots;
  std::vector<Embedding> embeddings;
};

// Frame t >= 2 starts a new shot iff cos(F(t), F(t-1)) < threshold, with F the
// flattened frame. Throws kInvalidArgument for a threshold outside [-1, 1].
std::vector<std::size_t> detect_shot_boundaries(const RegionFeatureTensor& tensor, double threshold);

// Throws kInvalidArgument unless boundaries start at 1, strictly increase and
// stay within [1, frames].
std::vector<ShotRange> shot_ranges(std::span<const std::size_t> boundaries, std::size_t frames);

std::vector<RegionFeatureTensor> segment_shots(const RegionFeatureTensor& tensor,
                                               std::span<const std::size_t> boundaries);

ShotSet embed_shots(const ModelParams& params, const RegionFeatureTensor& tensor,
                    double threshold = kDefaultShotThreshold);

// `video_id<TAB>shot_idx<TAB>start<TAB>end` per shot.
void write_shot_manifest(std::span<const ShotSet> shot_sets, std::ostream& out);

}  // namespace vrag
