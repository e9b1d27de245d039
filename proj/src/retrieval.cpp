// SPDX-License-Identifier: Apache-2.0
#include "vrag/retrieval.hpp"

#include <algorithm>
#include <atomic>
#include <iostream>

#include "vrag/error.hpp"
#include "vrag/similarity.hpp"

namespace vrag {
namespace {

std::atomic<std::uint64_t> g_similarity_evaluations{0};

double row_chamfer(const Matrix& s) {
  if (s.rows() == 0 || s.cols() == 0) throw Error(ErrorCode::kEmptyInput, "empty similarity matrix");
  double total = 0;
  for (Eigen::Index i = 0; i < s.rows(); ++i) total += s.row(i).maxCoeff();
  return total / static_cast<double>(s.rows());
}

}  // namespace

EmbeddingIndex::EmbeddingIndex(IndexMode mode, std::size_t dims) : mode_(mode), dims_(dims) {
  if (dims == 0) throw Error(ErrorCode::kInvalidArgument, "embedding dims must be >= 1");
}

void EmbeddingIndex::add(IndexEntry entry) {
  if (entry.embedding.size() != dims_) {
    throw Error(ErrorCode::kShapeMismatch, "embedding for " + entry.video_id + " has " +
                                               std::to_string(entry.embedding.size()) +
                                               " dims, index has " + std::to_string(dims_));
  }
  if (mode_ == IndexMode::kVideo) entry.shot_idx = 0;
  if (!keys_.emplace(entry.video_id, entry.shot_idx).second) {
    throw Error(ErrorCode::kInvalidArgument, "duplicate index entry " + entry.video_id +
                                                 (mode_ == IndexMode::kShot
                                                      ? " shot " + std::to_string(entry.shot_idx)
                                                      : std::string()));
  }
  auto [slot, inserted] = video_slot_.emplace(entry.video_id, videos_.size());
  if (inserted) videos_.push_back({entry.video_id, {}});
  videos_[slot->second].second.push_back(entries_.size());
  entries_.push_back(std::move(entry));
}

void EmbeddingIndex::add_video(const std::string& video_id, const Embedding& embedding) {
  if (mode_ != IndexMode::kVideo) throw Error(ErrorCode::kInvalidArgument, "index is in shot mode");
  std::vector<float> values(embedding.data(), embedding.data() + embedding.size());
  add({video_id, 0, std::move(values)});
}

void EmbeddingIndex::add_shots(const ShotSet& shots) {
  if (mode_ != IndexMode::kShot) throw Error(ErrorCode::kInvalidArgument, "index is in video mode");
  for (std::size_t i = 0; i < shots.embeddings.size(); ++i) {
    const auto& e = shots.embeddings[i];
    add({shots.video_id, static_cast<std::uint32_t>(i + 1), std::vector<float>(e.data(), e.data() + e.size())});
  }
}

Embedding EmbeddingIndex::embedding(std::size_t i) const {
  const auto& v = entries_.at(i).embedding;
  Embedding e(static_cast<Eigen::Index>(v.size()));
  for (std::size_t j = 0; j < v.size(); ++j) e[static_cast<Eigen::Index>(j)] = v[j];
  return e;
}

void sort_ranking(std::vector<RankedItem>& items) {
  std::sort(items.begin(), items.end(), [](const RankedItem& a, const RankedItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.video_id < b.video_id;
  });
}

RankedList rank(const std::string& query_id, const Embedding& query, const EmbeddingIndex& index) {
  if (index.mode() != IndexMode::kVideo) {
    throw Error(ErrorCode::kInvalidArgument, "video-level ranking needs a video-mode index");
  }
  if (index.empty()) throw Error(ErrorCode::kEmptyInput, "index is empty");
  if (static_cast<std::size_t>(query.size()) != index.dims()) {
    throw Error(ErrorCode::kShapeMismatch, "query dims differ from index dims");
  }
  RankedList out{query_id, {}};
  out.items.reserve(index.size());
  const std::span<const double> q(query.data(), static_cast<std::size_t>(query.size()));
  std::vector<double> buffer(index.dims());
  for (const auto& e : index.entries()) {
    std::copy(e.embedding.begin(), e.embedding.end(), buffer.begin());
    out.items.push_back({e.video_id, cosine_similarity<double>(q, buffer)});
  }
  g_similarity_evaluations.fetch_add(index.size(), std::memory_order_relaxed);
  sort_ranking(out.items);
  return out;
}

Matrix shot_similarity_matrix(std::span<const Embedding> query_shots,
                              std::span<const Embedding> db_shots) {
  if (query_shots.empty() || db_shots.empty()) {
    throw Error(ErrorCode::kEmptyInput, "shot similarity needs at least one shot per side");
  }
  Matrix s(static_cast<Eigen::Index>(query_shots.size()), static_cast<Eigen::Index>(db_shots.size()));
  for (std::size_t i = 0; i < query_shots.size(); ++i) {
    for (std::size_t j = 0; j < db_shots.size(); ++j) {
      s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          cosine_similarity(query_shots[i], db_shots[j]);
    }
  }
  return s;
}

double chamfer(const Matrix& similarity) { return row_chamfer(similarity); }

double symmetric_chamfer(const Matrix& similarity) {
  return (row_chamfer(similarity) + row_chamfer(similarity.transpose())) / 2.0;
}

RankedList shot_rank(const std::string& query_id, std::span<const Embedding> query_shots,
                     const EmbeddingIndex& index, ShotAggregation aggregation) {
  if (index.mode() != IndexMode::kShot) {
    throw Error(ErrorCode::kInvalidArgument, "shot-level ranking needs a shot-mode index");
  }
  if (index.empty()) throw Error(ErrorCode::kEmptyInput, "index is empty");
  RankedList out{query_id, {}};
  for (const auto& [video_id, slots] : index.videos()) {
    std::vector<Embedding> db;
    db.reserve(slots.size());
    for (auto slot : slots) db.push_back(index.embedding(slot));
    const Matrix s = shot_similarity_matrix(query_shots, db);
    const double score =
        aggregation == ShotAggregation::kChamfer ? chamfer(s) : symmetric_chamfer(s);
    out.items.push_back({video_id, score});
  }
  g_similarity_evaluations.fetch_add(index.videos().size(), std::memory_order_relaxed);
  sort_ranking(out.items);
  return out;
}

Embedding average_query_expansion(const Embedding& query, const EmbeddingIndex& index, std::size_t k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "expansion depth must be >= 1");
  const RankedList ranking = rank("", query, index);
  if (k > index.size()) {
    std::cerr << "warning: expansion depth " << k << " exceeds index size " << index.size()
              << "; using " << index.size() << '\n';
    k = index.size();
  }
  std::map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < index.size(); ++i) slot.emplace(index.entries()[i].video_id, i);
  Embedding sum = query;
  for (std::size_t i = 0; i < k; ++i) sum += index.embedding(slot.at(ranking.items[i].video_id));
  return sum / static_cast<double>(k + 1);
}

std::uint64_t similarity_evaluation_count() { return g_similarity_evaluations.load(); }

void reset_similarity_evaluation_count() { g_similarity_evaluations.store(0); }

}  // namespace vrag
