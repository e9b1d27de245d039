// SPDX-License-Identifier: Apache-2.0
#include "vrag/graph.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "vrag/error.hpp"

namespace vrag {

RegionGraph build_region_graph(std::size_t frames, std::size_t regions, std::size_t window,
                               std::size_t max_nodes) {
  if (frames == 0 || regions == 0) {
    throw Error(ErrorCode::kInvalidArgument, "graph needs T >= 1 and R >= 1");
  }
  if (frames > max_nodes / regions) {
    throw Error(ErrorCode::kDimensionOverflow,
                "T*R = " + std::to_string(frames) + "*" + std::to_string(regions) +
                    " exceeds the node limit " + std::to_string(max_nodes));
  }
  const std::size_t n = frames * regions;
  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<std::size_t> neighbors;
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t lo = f >= window ? f - window : 0;
    const std::size_t hi = std::min(frames - 1, f + std::min(window, frames));
    for (std::size_t r = 0; r < regions; ++r) {
      const std::size_t node = f * regions + r;
      // Frames [lo, hi] map to the contiguous node range [lo*R, (hi+1)*R).
      for (std::size_t j = lo * regions; j < (hi + 1) * regions; ++j) neighbors.push_back(j);
      offsets[node + 1] = neighbors.size();
    }
  }
  return RegionGraph(frames, regions, window, std::move(offsets), std::move(neighbors));
}

std::map<std::size_t, std::size_t> degree_histogram(const RegionGraph& graph) {
  std::map<std::size_t, std::size_t> hist;
  for (std::size_t i = 0; i < graph.nodes(); ++i) ++hist[graph.degree(i)];
  return hist;
}

}  // namespace vrag
