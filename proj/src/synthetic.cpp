// SPDX-License-Identifier: Apache-2.0
#include "vrag/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "vrag/error.hpp"

namespace vrag {
namespace {

using Rng = std::mt19937_64;

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03zu", prefix, i);
  return buf;
}

std::vector<double> gaussian(Rng& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

std::vector<double> jittered(Rng& rng, std::span<const double> base, std::size_t frames,
                             double jitter) {
  const std::size_t frame_size = base.size();
  std::vector<double> out;
  out.reserve(frames * frame_size);
  for (std::size_t t = 0; t < frames; ++t) {
    auto j = gaussian(rng, frame_size, jitter);
    for (std::size_t i = 0; i < frame_size; ++i) out.push_back(base[i] + j[i]);
  }
  return out;
}

// Frames of one scene: a per-region scene vector with small per-frame jitter.
std::vector<double> scene_frames(Rng& rng, std::size_t frames, std::size_t frame_size,
                                 double jitter) {
  return jittered(rng, gaussian(rng, frame_size), frames, jitter);
}

std::vector<float> add_noise(Rng& rng, std::span<const double> clean, double noise_scale) {
  std::vector<float> out(clean.size());
  if (noise_scale > 0) {
    std::normal_distribution<double> dist(0.0, noise_scale);
    for (std::size_t i = 0; i < clean.size(); ++i) out[i] = static_cast<float>(clean[i] + dist(rng));
  } else {
    for (std::size_t i = 0; i < clean.size(); ++i) out[i] = static_cast<float>(clean[i]);
  }
  return out;
}

}  // namespace

std::vector<LabeledVideo> synth_corpus(const SynthOptions& o) {
  if (o.groups < 1 || o.videos_per_group < 1 || o.regions < 1 || o.channels < 1) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic corpus counts must be >= 1");
  }
  if (o.min_frames < 1 || o.min_frames > o.max_frames) {
    throw Error(ErrorCode::kInvalidArgument, "unsatisfiable frame range [" +
                                                 std::to_string(o.min_frames) + ", " +
                                                 std::to_string(o.max_frames) + "]");
  }
  if (o.noise_scale < 0 || o.scenes_per_group < 1) {
    throw Error(ErrorCode::kInvalidArgument, "noise scale must be >= 0 and scenes >= 1");
  }
  Rng rng(o.seed);
  const std::size_t frame_size = o.regions * o.channels;
  const std::size_t proto_frames = o.max_frames;

  std::vector<std::vector<double>> pool;
  for (std::size_t s = 0; s < o.shared_scene_pool; ++s) pool.push_back(gaussian(rng, frame_size));

  // Orthonormal basis of the nuisance subspace (rows), C channels each.
  std::vector<std::vector<double>> basis;
  for (std::size_t k = 0; k < std::min(o.nuisance_dims, o.channels); ++k) {
    auto b = gaussian(rng, o.channels);
    for (const auto& prev : basis) {
      double dot = 0;
      for (std::size_t c = 0; c < o.channels; ++c) dot += b[c] * prev[c];
      for (std::size_t c = 0; c < o.channels; ++c) b[c] -= dot * prev[c];
    }
    double norm = 0;
    for (double x : b) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : b) x /= norm;
    basis.push_back(std::move(b));
  }

  std::vector<LabeledVideo> videos;
  videos.reserve(o.groups * o.videos_per_group);
  for (std::size_t g = 0; g < o.groups; ++g) {
    const std::string group_id = numbered("g", g);
    auto signature = gaussian(rng, frame_size, o.signature_scale);
    // Scene cut points split the prototype into roughly equal runs.
    std::vector<double> proto;
    proto.reserve(proto_frames * frame_size);
    const std::size_t scenes = std::min(o.scenes_per_group, proto_frames);
    for (std::size_t s = 0; s < scenes; ++s) {
      std::size_t begin = s * proto_frames / scenes;
      std::size_t end = (s + 1) * proto_frames / scenes;
      auto frames = pool.empty()
                        ? scene_frames(rng, end - begin, frame_size, o.frame_jitter)
                        : jittered(rng, pool[uniform_index(rng, 0, pool.size() - 1)], end - begin,
                                   o.frame_jitter);
      for (std::size_t i = 0; i < frames.size(); ++i) {
        proto.push_back(frames[i] + signature[i % frame_size]);
      }
    }

    for (std::size_t v = 0; v < o.videos_per_group; ++v) {
      std::size_t length = uniform_index(rng, o.min_frames, o.max_frames);
      std::size_t start = uniform_index(rng, 0, proto_frames - length);
      std::vector<std::size_t> keep;
      for (std::size_t t = start; t < start + length; ++t) keep.push_back(t);
      if (o.subsample && keep.size() > 1) {
        std::bernoulli_distribution coin(0.75);
        std::vector<std::size_t> kept;
        for (auto t : keep) {
          if (coin(rng)) kept.push_back(t);
        }
        if (!kept.empty()) keep = std::move(kept);
      }
      std::vector<double> clean;
      clean.reserve(keep.size() * frame_size);
      for (auto t : keep) {
        auto first = proto.begin() + static_cast<std::ptrdiff_t>(t * frame_size);
        clean.insert(clean.end(), first, first + static_cast<std::ptrdiff_t>(frame_size));
      }
      if (!basis.empty() && o.nuisance_scale > 0) {
        std::vector<double> offset(frame_size, 0.0);
        for (std::size_t r = 0; r < o.regions; ++r) {
          auto coeff = gaussian(rng, basis.size(), o.nuisance_scale);
          for (std::size_t k = 0; k < basis.size(); ++k) {
            for (std::size_t c = 0; c < o.channels; ++c) offset[r * o.channels + c] += coeff[k] * basis[k][c];
          }
        }
        for (std::size_t i = 0; i < clean.size(); ++i) clean[i] += offset[i % frame_size];
      }
      auto data = add_noise(rng, clean, o.noise_scale);
      videos.push_back({RegionFeatureTensor(group_id + "_" + numbered("v", v), keep.size(),
                                            o.regions, o.channels, std::move(data)),
                        group_id});
    }
  }
  return videos;
}

CorpusManifest write_corpus(std::span<const LabeledVideo> videos, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  CorpusManifest manifest;
  for (const auto& v : videos) {
    auto path = dir / (v.features.video_id() + ".rmf");
    write_features(v.features, path);
    manifest.entries.push_back({v.features.video_id(), path, v.group_id});
  }
  write_manifest(manifest, manifest_path(dir));
  return manifest;
}

SceneCorpus synth_scene_corpus(const SceneCorpusOptions& o) {
  if (o.queries < 1 || o.scenes_per_video < 1 || o.regions < 1 || o.channels < 1 ||
      o.min_scene_frames < 1 || o.min_scene_frames > o.max_scene_frames) {
    throw Error(ErrorCode::kInvalidArgument, "invalid scene corpus options");
  }
  Rng rng(o.seed);
  const std::size_t frame_size = o.regions * o.channels;
  auto fresh_scene = [&] {
    return scene_frames(rng, uniform_index(rng, o.min_scene_frames, o.max_scene_frames),
                        frame_size, o.frame_jitter);
  };
  auto assemble = [&](std::string id, const std::vector<std::vector<double>>& scenes) {
    std::vector<double> clean;
    for (const auto& s : scenes) clean.insert(clean.end(), s.begin(), s.end());
    std::size_t frames = clean.size() / frame_size;
    return RegionFeatureTensor(std::move(id), frames, o.regions, o.channels,
                               add_noise(rng, clean, o.noise_scale));
  };

  SceneCorpus corpus;
  std::size_t db_index = 0;
  for (std::size_t q = 0; q < o.queries; ++q) {
    const std::size_t query_scenes = o.single_scene_queries ? 1 : o.scenes_per_video;
    std::vector<std::vector<double>> scenes;
    for (std::size_t s = 0; s < query_scenes; ++s) scenes.push_back(fresh_scene());
    const std::string query_id = numbered("q", q);
    corpus.queries.push_back(assemble(query_id, scenes));

    for (std::size_t p = 0; p < o.positives_per_query; ++p) {
      std::vector<std::vector<double>> parts;
      for (std::size_t s = 0; s + 1 < o.scenes_per_video; ++s) parts.push_back(fresh_scene());
      // Shared scene: a contiguous run of at least half of the query scene.
      const auto& shared = scenes[uniform_index(rng, 0, scenes.size() - 1)];
      std::size_t n = shared.size() / frame_size;
      std::size_t len = uniform_index(rng, (n + 1) / 2, n);
      std::size_t start = uniform_index(rng, 0, n - len);
      parts.emplace(parts.begin() + static_cast<std::ptrdiff_t>(uniform_index(rng, 0, parts.size())),
                    shared.begin() + static_cast<std::ptrdiff_t>(start * frame_size),
                    shared.begin() + static_cast<std::ptrdiff_t>((start + len) * frame_size));
      std::string id = numbered("d", db_index++);
      corpus.positives.emplace_back(query_id, id);
      corpus.database.push_back(assemble(std::move(id), parts));
    }
  }
  for (std::size_t d = 0; d < o.distractors; ++d) {
    std::vector<std::vector<double>> parts;
    for (std::size_t s = 0; s < o.scenes_per_video; ++s) parts.push_back(fresh_scene());
    corpus.database.push_back(assemble(numbered("d", db_index++), parts));
  }
  // Shuffle database ids so the deterministic tie order carries no label signal.
  std::vector<std::size_t> order(corpus.database.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::string> renamed(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) renamed[order[i]] = numbered("d", i);
  for (auto& [query, video] : corpus.positives) {
    video = renamed[std::stoul(video.substr(1))];
  }
  for (std::size_t i = 0; i < order.size(); ++i) corpus.database[i].set_video_id(renamed[i]);
  std::sort(corpus.database.begin(), corpus.database.end(),
            [](const auto& a, const auto& b) { return a.video_id() < b.video_id(); });
  return corpus;
}

}  // namespace vrag
