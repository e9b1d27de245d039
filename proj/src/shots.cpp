// SPDX-License-Identifier: Apache-2.0
#include "vrag/shots.hpp"

#include <ostream>

#include "vrag/error.hpp"
#include "vrag/similarity.hpp"

namespace vrag {

std::vector<std::size_t> detect_shot_boundaries(const RegionFeatureTensor& tensor, double threshold) {
  if (!(threshold >= -1.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "shot threshold must lie in [-1, 1]");
  }
  std::vector<std::size_t> boundaries{1};
  for (std::size_t t = 2; t <= tensor.frames(); ++t) {
    if (cosine_similarity(tensor.frame(t), tensor.frame(t - 1)) < threshold) boundaries.push_back(t);
  }
  return boundaries;
}

std::vector<ShotRange> shot_ranges(std::span<const std::size_t> boundaries, std::size_t frames) {
  if (boundaries.empty() || boundaries.front() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "shot boundaries must start at frame 1");
  }
  std::vector<ShotRange> ranges;
  for (std::size_t i = 0; i < boundaries.size(); ++i) {
    const std::size_t start = boundaries[i];
    const std::size_t end = i + 1 < boundaries.size() ? boundaries[i + 1] - 1 : frames;
    if (start > frames || (i + 1 < boundaries.size() && boundaries[i + 1] <= start)) {
      throw Error(ErrorCode::kInvalidArgument, "shot boundaries must be increasing and within [1, T]");
    }
    ranges.push_back({start, end});
  }
  return ranges;
}

std::vector<RegionFeatureTensor> segment_shots(const RegionFeatureTensor& tensor,
                                               std::span<const std::size_t> boundaries) {
  std::vector<RegionFeatureTensor> shots;
  for (const auto& r : shot_ranges(boundaries, tensor.frames())) {
    shots.push_back(slice_frames(tensor, r.start, r.end));
  }
  return shots;
}

ShotSet embed_shots(const ModelParams& params, const RegionFeatureTensor& tensor, double threshold) {
  ShotSet set;
  set.video_id = tensor.video_id();
  set.boundaries = detect_shot_boundaries(tensor, threshold);
  set.shots = shot_ranges(set.boundaries, tensor.frames());
  if (set.shots.size() == 1) {
    set.embeddings.push_back(embed_video(params, tensor));
  } else {
    for (const auto& shot : segment_shots(tensor, set.boundaries)) {
      set.embeddings.push_back(embed_video(params, shot));
    }
  }
  return set;
}

void write_shot_manifest(std::span<const ShotSet> shot_sets, std::ostream& out) {
  for (const auto& s : shot_sets) {
    for (std::size_t i = 0; i < s.shots.size(); ++i) {
      out << s.video_id << '\t' << i + 1 << '\t' << s.shots[i].start << '\t' << s.shots[i].end << '\n';
    }
  }
}

}  // namespace vrag
