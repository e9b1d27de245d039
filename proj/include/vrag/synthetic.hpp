// SPDX-License-Identifier: Apache-2.0
//
// Desk-scale synthetic corpora standing in for real extracted features.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "vrag/features.hpp"

namespace vrag {

struct SynthOptions {
  std::size_t groups = 8;
  std::size_t videos_per_group = 4;
  std::size_t min_frames = 20;
  std::size_t max_frames = 60;
  std::size_t regions = 4;
  std::size_t channels = 32;
  double noise_scale = 0.1;
  // Drop frames at random (order preserved) after cropping.
  bool subsample = false;
  std::uint64_t seed = 0;

  // Prototype structure. Each group prototype is a run of scenes; every frame
  // also carries a group-wide signature so non-overlapping crops of the same
  // group remain related.
  std::size_t scenes_per_group = 3;
  double signature_scale = 0.6;
  double frame_jitter = 0.2;
  // When > 0, group scenes are drawn from a corpus-wide pool of this many
  // scenes, so different groups share content and differ by signature and
  // scene order.
  std::size_t shared_scene_pool = 0;
  // Per-video nuisance: every region of a video is offset by its own random
  // vector confined to a fixed corpus-wide subspace of this many channel
  // directions, scaled by nuisance_scale. Group identity is independent of it.
  std::size_t nuisance_dims = 0;
  double nuisance_scale = 0.0;
};

// Group g's videos are noisy temporal crops of one prototype sequence of
// max_frames frames. With noise_scale = 0 and min_frames = max_frames, all
// videos of a group are identical.
std::vector<LabeledVideo> synth_corpus(const SynthOptions& options);

// Writes one RMF1 file per video plus manifest.tsv into `dir`.
CorpusManifest write_corpus(std::span<const LabeledVideo> videos, const std::filesystem::path& dir);

struct SceneCorpusOptions {
  std::size_t queries = 8;
  std::size_t positives_per_query = 3;
  std::size_t distractors = 24;
  std::size_t scenes_per_video = 3;
  std::size_t min_scene_frames = 6;
  std::size_t max_scene_frames = 12;
  std::size_t regions = 4;
  std::size_t channels = 32;
  double noise_scale = 0.1;
  double frame_jitter = 0.2;
  // Queries are one scene long instead of scenes_per_video scenes.
  bool single_scene_queries = false;
  std::uint64_t seed = 0;
};

// Videos assembled from independent scenes. Each positive of a query shares
// exactly one scene with it; the other scenes and all distractor scenes are
// unique to their video.
struct SceneCorpus {
  std::vector<RegionFeatureTensor> queries;
  std::vector<RegionFeatureTensor> database;
  // (query id, database video id) pairs that share a scene.
  std::vector<std::pair<std::string, std::string>> positives;
};

SceneCorpus synth_scene_corpus(const SceneCorpusOptions& options);

}  // namespace vrag
