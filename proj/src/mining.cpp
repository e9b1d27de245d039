// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "vrag/error.hpp"
#include "vrag/training.hpp"

namespace vrag {

std::vector<Triplet> mine_triplets(std::span<const LabeledVideo> corpus, const ModelParams& params,
                                   std::size_t pool_size, std::uint64_t seed,
                                   std::size_t max_clip_frames) {
  std::set<std::string> groups;
  for (const auto& v : corpus) groups.insert(v.group_id);
  if (groups.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "triplet mining needs at least two groups");
  }
  if (max_clip_frames < 1) throw Error(ErrorCode::kInvalidArgument, "clip length must be >= 1");

  std::mt19937_64 rng(seed);
  std::vector<ClipWindow> clips(corpus.size());
  std::vector<Embedding> embeddings(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& f = corpus[i].features;
    const std::size_t length = std::min(f.frames(), max_clip_frames);
    const std::size_t first =
        std::uniform_int_distribution<std::size_t>(1, f.frames() - length + 1)(rng);
    clips[i] = {first, first + length - 1};
    embeddings[i] = embed_video(params, length == f.frames() ? f : slice_frames(f, first, clips[i].last));
  }

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < corpus.size(); ++a) {
    for (std::size_t p = 0; p < corpus.size(); ++p) {
      if (a != p && corpus[a].group_id == corpus[p].group_id) pairs.emplace_back(a, p);
    }
  }
  if (pairs.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no group has two videos to form a positive pair");
  }
  std::shuffle(pairs.begin(), pairs.end(), rng);

  // Negatives per anchor, hardest (most similar) first; ties by corpus order.
  std::map<std::size_t, std::vector<std::size_t>> ranked;
  for (const auto& [a, p] : pairs) {
    if (ranked.contains(a)) continue;
    std::vector<std::size_t> negs;
    std::vector<double> sim(corpus.size(), 0.0);
    for (std::size_t n = 0; n < corpus.size(); ++n) {
      if (corpus[n].group_id == corpus[a].group_id) continue;
      negs.push_back(n);
      sim[n] = cosine_similarity(embeddings[a], embeddings[n]);
    }
    std::stable_sort(negs.begin(), negs.end(),
                     [&](std::size_t x, std::size_t y) { return sim[x] > sim[y]; });
    ranked.emplace(a, std::move(negs));
  }

  std::vector<Triplet> triplets;
  for (std::size_t rank = 0; triplets.size() < pool_size; ++rank) {
    bool any = false;
    for (const auto& [a, p] : pairs) {
      const auto& negs = ranked.at(a);
      if (rank >= negs.size()) continue;
      any = true;
      const std::size_t n = negs[rank];
      triplets.push_back({a, p, n, clips[a], clips[p], clips[n]});
      if (triplets.size() == pool_size) break;
    }
    if (!any) break;
  }
  return triplets;
}

}  // namespace vrag
