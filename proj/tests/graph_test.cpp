// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"
#include "vrag/check/oracles.hpp"
#include "vrag/graph.hpp"

namespace vrag {
namespace {

using testing::error_code_of;

std::set<std::pair<std::size_t, std::size_t>> edges_of(const RegionGraph& g) {
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < g.nodes(); ++i) {
    for (auto j : g.neighbors(i)) out.emplace(i, j);
  }
  return out;
}

TEST(Graph, SingleFrame) {
  auto g = build_region_graph(1, 3);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(g.degree(i), 3u);
  EXPECT_EQ(degree_histogram(g), (std::map<std::size_t, std::size_t>{{3, 3}}));
}

TEST(Graph, ThreeFramesTwoRegions) {
  auto g = build_region_graph(3, 2);
  EXPECT_EQ(g.nodes(), 6u);
  EXPECT_EQ(g.edge_count(), 28u);
  EXPECT_EQ(g.degree(0), 4u);
  EXPECT_EQ(g.degree(2), 6u);
  EXPECT_EQ(g.degree(3), 6u);
  EXPECT_EQ(g.degree(5), 4u);
  EXPECT_EQ(degree_histogram(g), (std::map<std::size_t, std::size_t>{{4, 4}, {6, 2}}));
  EXPECT_EQ(edges_of(g), check::brute_force_adjacency(3, 2));
}

TEST(Graph, TwoFramesOneRegion) {
  auto g = build_region_graph(2, 1);
  auto n0 = g.neighbors(0);
  auto n1 = g.neighbors(1);
  EXPECT_EQ(std::vector<std::size_t>(n0.begin(), n0.end()), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(std::vector<std::size_t>(n1.begin(), n1.end()), (std::vector<std::size_t>{0, 1}));
}

TEST(Graph, TwoFramesNineRegions) {
  EXPECT_EQ(degree_histogram(build_region_graph(2, 9)), (std::map<std::size_t, std::size_t>{{18, 18}}));
}

TEST(Graph, MatchesBruteForceOnRandomShapes) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> t_dist(1, 12), r_dist(1, 6);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t t = t_dist(rng), r = r_dist(rng);
    auto g = build_region_graph(t, r);
    ASSERT_EQ(edges_of(g), check::brute_force_adjacency(t, r)) << "T=" << t << " R=" << r;
  }
}

TEST(Graph, StructuralInvariants) {
  for (std::size_t t = 1; t <= 6; ++t) {
    for (std::size_t r = 1; r <= 4; ++r) {
      auto g = build_region_graph(t, r);
      auto edges = edges_of(g);
      std::size_t min_degree = SIZE_MAX, max_degree = 0;
      for (std::size_t i = 0; i < g.nodes(); ++i) {
        auto n = g.neighbors(i);
        EXPECT_TRUE(std::is_sorted(n.begin(), n.end()));
        EXPECT_TRUE(edges.contains({i, i}));
        EXPECT_EQ(g.frame_of(i), i / r);
        for (auto j : n) EXPECT_TRUE(edges.contains({j, i}));
        min_degree = std::min(min_degree, g.degree(i));
        max_degree = std::max(max_degree, g.degree(i));
      }
      if (t == 1) {
        EXPECT_EQ(min_degree, r);
        EXPECT_EQ(max_degree, r);
      } else {
        EXPECT_EQ(min_degree, 2 * r);
        EXPECT_EQ(max_degree, t >= 3 ? 3 * r : 2 * r);
      }
    }
  }
}

TEST(Graph, WiderWindow) {
  for (std::size_t w = 0; w <= 3; ++w) {
    auto g = build_region_graph(7, 2, w);
    EXPECT_EQ(edges_of(g), check::brute_force_adjacency(7, 2, w)) << "window " << w;
  }
}

TEST(Graph, Errors) {
  EXPECT_EQ(error_code_of([] { build_region_graph(0, 3); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_code_of([] { build_region_graph(3, 0); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_code_of([] { build_region_graph(100, 100, 1, 9999); }), ErrorCode::kDimensionOverflow);
  EXPECT_EQ(error_code_of([] { build_region_graph(SIZE_MAX / 2, 4); }), ErrorCode::kDimensionOverflow);
  EXPECT_NO_THROW(build_region_graph(100, 100, 1, 10000));
}

}  // namespace
}  // namespace vrag
