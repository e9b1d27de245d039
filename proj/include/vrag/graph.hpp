// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

namespace vrag {

// Regions of frames at most this far apart are connected.
inline constexpr std::size_t kDefaultTemporalWindow = 1;
// Upper bound on T*R accepted by build_region_graph.
inline constexpr std::size_t kDefaultMaxNodes = std::size_t{1} << 24;

// Spatio-temporal region graph. Node i (0-based) is region i % R of frame
// i / R (0-based frame index). Every node is linked to itself, to the other
// regions of its frame, and to all regions of frames within the temporal
// window. Neighbor lists are sorted ascending and stored in CSR form.
class RegionGraph {
 public:
  RegionGraph() = default;
  RegionGraph(std::size_t frames, std::size_t regions, std::size_t window,
              std::vector<std::size_t> offsets, std::vector<std::size_t> neighbors)
      : frames_(frames),
        regions_(regions),
        window_(window),
        offsets_(std::move(offsets)),
        neighbors_(std::move(neighbors)) {}

  std::size_t nodes() const { return frames_ * regions_; }
  std::size_t frames() const { return frames_; }
  std::size_t regions() const { return regions_; }
  std::size_t window() const { return window_; }
  std::size_t frame_of(std::size_t node) const { return node / regions_; }

  std::span<const std::size_t> neighbors(std::size_t node) const {
    return std::span<const std::size_t>(neighbors_).subspan(offsets_[node],
                                                            offsets_[node + 1] - offsets_[node]);
  }
  std::size_t degree(std::size_t node) const { return offsets_[node + 1] - offsets_[node]; }
  std::size_t edge_count() const { return neighbors_.size(); }

  // Offset of node's first entry in the flattened neighbor array; per-edge
  // arrays (attention weights) share this indexing.
  std::size_t edge_offset(std::size_t node) const { return offsets_[node]; }

 private:
  std::size_t frames_ = 0;
  std::size_t regions_ = 0;
  std::size_t window_ = kDefaultTemporalWindow;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> neighbors_;
};

// Throws kInvalidArgument for T or R of zero and kDimensionOverflow when T*R
// exceeds max_nodes.
RegionGraph build_region_graph(std::size_t frames, std::size_t regions,
                               std::size_t window = kDefaultTemporalWindow,
                               std::size_t max_nodes = kDefaultMaxNodes);

std::map<std::size_t, std::size_t> degree_histogram(const RegionGraph& graph);

}  // namespace vrag
