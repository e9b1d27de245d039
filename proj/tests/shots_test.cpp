// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <sstream>

#include "test_support.hpp"
#include "vrag/shots.hpp"

namespace vrag {
namespace {

using testing::error_code_of;
using testing::random_tensor;
using testing::tensor_from_frames;

// Frames [u, u, w, w] with cos(u, w) = 0.
RegionFeatureTensor two_shot_video() {
  std::vector<float> u{1, 2, 0, 0}, w{0, 0, 3, -1};
  return tensor_from_frames({u, u, w, w}, 2, "two");
}

void expect_partition(const std::vector<ShotRange>& shots, std::size_t frames) {
  ASSERT_FALSE(shots.empty());
  EXPECT_EQ(shots.front().start, 1u);
  EXPECT_EQ(shots.back().end, frames);
  for (std::size_t i = 0; i < shots.size(); ++i) {
    EXPECT_GE(shots[i].length(), 1u);
    if (i > 0) EXPECT_EQ(shots[i].start, shots[i - 1].end + 1);
  }
}

TEST(Boundaries, TwoShots) {
  auto x = two_shot_video();
  auto b = detect_shot_boundaries(x, 0.75);
  EXPECT_EQ(b, (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(shot_ranges(b, 4), (std::vector<ShotRange>{{1, 2}, {3, 4}}));
}

TEST(Boundaries, IdenticalFramesSingleShot) {
  std::vector<float> u{0.5f, -1, 2, 7};
  auto x = tensor_from_frames({u, u, u, u, u}, 2);
  for (double tau : {-1.0, 0.0, 0.75, 0.999999}) {
    EXPECT_EQ(detect_shot_boundaries(x, tau), (std::vector<std::size_t>{1}));
  }
}

TEST(Boundaries, ThresholdMinusOneNeverSplits) {
  std::vector<float> u{1, 0}, v{-1, 0};
  auto x = tensor_from_frames({u, v, u, v}, 1);
  EXPECT_EQ(detect_shot_boundaries(x, -1.0), (std::vector<std::size_t>{1}));
  EXPECT_EQ(detect_shot_boundaries(x, -0.99).size(), 4u);
}

TEST(Boundaries, StrictInequality) {
  std::vector<float> u{1, 0}, w{1, 1};  // cos = 1/sqrt(2)
  auto x = tensor_from_frames({u, w}, 1);
  const double c = 1 / std::sqrt(2.0);
  EXPECT_EQ(detect_shot_boundaries(x, c - 1e-12).size(), 1u);
  EXPECT_EQ(detect_shot_boundaries(x, c + 1e-12).size(), 2u);
}

TEST(Boundaries, ZeroFrameComparesAsCosineZero) {
  std::vector<float> u{1, 2}, z{0, 0};
  auto x = tensor_from_frames({u, z, z}, 1);
  EXPECT_EQ(detect_shot_boundaries(x, 0.5), (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_EQ(detect_shot_boundaries(x, 0.0), (std::vector<std::size_t>{1}));
}

TEST(Boundaries, RejectsThresholdOutsideRange) {
  auto x = two_shot_video();
  EXPECT_EQ(error_code_of([&] { detect_shot_boundaries(x, 1.5); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_code_of([&] { detect_shot_boundaries(x, -1.01); }), ErrorCode::kInvalidArgument);
}

TEST(Boundaries, PartitionAndMonotoneInThreshold) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> tau(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    auto x = random_tensor(rng, 1 + trial % 12, 2, 3);
    double lo = tau(rng), hi = tau(rng);
    if (lo > hi) std::swap(lo, hi);
    auto b_lo = detect_shot_boundaries(x, lo);
    auto b_hi = detect_shot_boundaries(x, hi);
    expect_partition(shot_ranges(b_lo, x.frames()), x.frames());
    expect_partition(shot_ranges(b_hi, x.frames()), x.frames());
    EXPECT_LE(b_lo.size(), b_hi.size());
    // Every boundary at the lower threshold is also one at the higher threshold.
    for (auto b : b_lo) EXPECT_TRUE(std::find(b_hi.begin(), b_hi.end(), b) != b_hi.end());
  }
}

TEST(Ranges, Validation) {
  EXPECT_EQ(error_code_of([] { shot_ranges(std::vector<std::size_t>{2}, 4); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_code_of([] { shot_ranges(std::vector<std::size_t>{1, 3, 3}, 4); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_code_of([] { shot_ranges(std::vector<std::size_t>{1, 5}, 4); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_code_of([] { shot_ranges(std::vector<std::size_t>{}, 4); }), ErrorCode::kInvalidArgument);
}

TEST(Segment, SingleShotAndTwoShots) {
  auto x = two_shot_video();
  auto one = segment_shots(x, std::vector<std::size_t>{1});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0], x);
  auto two = segment_shots(x, std::vector<std::size_t>{1, 3});
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0].frames(), 2u);
  EXPECT_EQ(two[1].frames(), 2u);
}

TEST(Segment, ConcatenationReproducesInput) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t t = 1 + trial % 10;
    auto x = random_tensor(rng, t, 2, 2, "r");
    std::vector<std::size_t> b{1};
    std::bernoulli_distribution coin(0.4);
    for (std::size_t f = 2; f <= t; ++f) {
      if (coin(rng)) b.push_back(f);
    }
    auto parts = segment_shots(x, b);
    EXPECT_EQ(parts.size(), b.size());
    auto joined = concat_frames(parts);
    joined.set_video_id(x.video_id());
    EXPECT_EQ(joined, x);
  }
}

TEST(EmbedShots, SingleShotEqualsVideoEmbedding) {
  std::vector<float> u{0.5f, -1, 2, 7};
  auto x = tensor_from_frames({u, u, u}, 2, "still");
  auto p = init_params(testing::small_config(2, 3, 2, 4), 1);
  auto s = embed_shots(p, x, 0.75);
  ASSERT_EQ(s.shots.size(), 1u);
  EXPECT_EQ(s.video_id, "still");
  EXPECT_EQ(s.embeddings[0], embed_video(p, x));
}

TEST(EmbedShots, TwoShotVideo) {
  auto x = two_shot_video();
  auto p = init_params(testing::small_config(2, 3, 2, 4), 2);
  auto s = embed_shots(p, x);
  ASSERT_EQ(s.embeddings.size(), 2u);
  EXPECT_EQ(s.boundaries, (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(s.embeddings[1], embed_video(p, slice_frames(x, 3, 4)));
  auto again = embed_shots(p, x);
  EXPECT_EQ(again.embeddings, s.embeddings);
}

TEST(EmbedShots, MonotoneShotCount) {
  std::mt19937_64 rng(3);
  auto p = init_params(testing::small_config(3, 2, 1, 2), 3);
  auto x = random_tensor(rng, 9, 2, 3);
  std::size_t previous = 0;
  for (double tau = -1.0; tau <= 1.0; tau += 0.25) {
    auto s = embed_shots(p, x, tau);
    EXPECT_GE(s.shots.size(), previous);
    EXPECT_EQ(s.embeddings.size(), s.shots.size());
    previous = s.shots.size();
  }
}

TEST(ShotManifest, Format) {
  auto x = two_shot_video();
  auto p = init_params(testing::small_config(2, 3, 2, 4), 2);
  std::vector<ShotSet> sets{embed_shots(p, x)};
  std::ostringstream out;
  write_shot_manifest(sets, out);
  EXPECT_EQ(out.str(), "two\t1\t1\t2\ntwo\t2\t3\t4\n");
}

TEST(Shots, DefaultThreshold) { EXPECT_EQ(kDefaultShotThreshold, 0.75); }

}  // namespace
}  // namespace vrag
