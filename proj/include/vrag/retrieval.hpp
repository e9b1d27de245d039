// SPDX-License-Identifier: Apache-2.0
//
// Flat exact-scan embedding index, cosine ranking, shot-level Chamfer
// aggregation, average query expansion and mAP evaluation.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vrag/model.hpp"
#include "vrag/shots.hpp"

namespace vrag {

enum class IndexMode : std::uint8_t { kVideo = 0, kShot = 1 };

struct IndexEntry {
  std::string video_id;
  std::uint32_t shot_idx = 0;  // 1-based in shot mode, 0 in video mode
  std::vector<float> embedding;
  friend bool operator==(const IndexEntry&, const IndexEntry&) = default;
};

// Embeddings are stored as f32, the on-disk precision; similarity is
// computed in f64.
class EmbeddingIndex {
 public:
  EmbeddingIndex(IndexMode mode, std::size_t dims);

  // Throws kShapeMismatch on a dims mismatch and kInvalidArgument on a
  // duplicate id (video mode) or duplicate (id, shot) pair (shot mode).
  void add(IndexEntry entry);
  void add_video(const std::string& video_id, const Embedding& embedding);
  void add_shots(const ShotSet& shots);

  IndexMode mode() const { return mode_; }
  std::size_t dims() const { return dims_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<IndexEntry>& entries() const { return entries_; }

  Embedding embedding(std::size_t i) const;

  // Shot mode: distinct video ids in insertion order with their entry indices.
  const std::vector<std::pair<std::string, std::vector<std::size_t>>>& videos() const { return videos_; }

  friend bool operator==(const EmbeddingIndex& a, const EmbeddingIndex& b) {
    return a.mode_ == b.mode_ && a.dims_ == b.dims_ && a.entries_ == b.entries_;
  }

 private:
  IndexMode mode_;
  std::size_t dims_;
  std::vector<IndexEntry> entries_;
  std::vector<std::pair<std::string, std::vector<std::size_t>>> videos_;
  std::map<std::string, std::size_t> video_slot_;
  std::set<std::pair<std::string, std::uint32_t>> keys_;
};

// EMB1: "EMB1", u8 mode, u32 count, u32 D, then per record u32 id length,
// UTF-8 id, [u32 shot_idx in shot mode], D f32 values; CRC32 trailer.
std::vector<std::uint8_t> encode_index(const EmbeddingIndex& index);
EmbeddingIndex decode_index(std::span<const std::uint8_t> bytes);
void write_index(const EmbeddingIndex& index, const std::filesystem::path& path);
EmbeddingIndex read_index(const std::filesystem::path& path);

struct RankedItem {
  std::string video_id;
  double score = 0;
  friend bool operator==(const RankedItem&, const RankedItem&) = default;
};

// Scores non-increasing; equal scores ordered by ascending video id.
struct RankedList {
  std::string query_id;
  std::vector<RankedItem> items;
};

void sort_ranking(std::vector<RankedItem>& items);

// Cosine ranking against a video-mode index. Throws kEmptyInput for an empty
// index and kInvalidArgument for a shot-mode index.
RankedList rank(const std::string& query_id, const Embedding& query, const EmbeddingIndex& index);

// S(i, j) = cos(query_i, db_j). Throws kEmptyInput if either side is empty.
Matrix shot_similarity_matrix(std::span<const Embedding> query_shots,
                              std::span<const Embedding> db_shots);

// Mean over rows of the row maximum.
double chamfer(const Matrix& similarity);
// Mean of chamfer(S) and chamfer(S^T).
double symmetric_chamfer(const Matrix& similarity);

enum class ShotAggregation { kChamfer, kSymmetricChamfer };

RankedList shot_rank(const std::string& query_id, std::span<const Embedding> query_shots,
                     const EmbeddingIndex& index, ShotAggregation aggregation);

inline constexpr std::size_t kDefaultExpansionDepth = 5;

// Mean of the query and its top-k neighbours by cosine. k larger than the
// index is clamped with a warning on stderr.
inline constexpr std::size_t kDefaultQueryExpansionDepth = 5;

Embedding average_query_expansion(const Embedding& query, const EmbeddingIndex& index, std::size_t k);

// Count of query-to-database-video similarity evaluations since the last reset.
std::uint64_t similarity_evaluation_count();
void reset_similarity_evaluation_count();

// query_id<TAB>rank<TAB>video_id<TAB>score, rank 1-based.
void write_rankings(std::span<const RankedList> rankings, std::ostream& out);
std::vector<RankedList> read_rankings(std::istream& in);

// Relevance judgements: query -> video -> labels, plus an optional group per
// query for macro averaging.
struct Qrels {
  std::map<std::string, std::map<std::string, std::set<std::string>>> labels;
  std::map<std::string, std::string> query_group;
};

struct TaskDefinition {
  std::string name;
  std::set<std::string> positive_labels;
};

// `query_id<TAB>video_id<TAB>label[<TAB>query_group]`
Qrels read_qrels(std::istream& in);
void write_qrels(const Qrels& qrels, std::ostream& out);
// `task_name<TAB>label1,label2,...`
std::map<std::string, TaskDefinition> read_tasks(std::istream& in);
void write_tasks(const std::map<std::string, TaskDefinition>& tasks, std::ostream& out);

// Throws kInvalidArgument when a qrels label is declared by no task.
void validate_labels(const Qrels& qrels, const std::map<std::string, TaskDefinition>& tasks);

std::set<std::string> relevant_videos(const Qrels& qrels, const std::string& query_id,
                                      const TaskDefinition& task);

// Sum of precision at each relevant hit divided by the total relevant count.
double average_precision(std::span<const std::string> ranked_ids, const std::set<std::string>& relevant);

struct MapReport {
  double mean_ap = 0;
  std::vector<std::pair<std::string, double>> per_query;
  std::vector<std::string> excluded;  // no positives for the task
  std::vector<std::string> flagged;   // empty ranking despite positives (AP 0)
  std::map<std::string, double> per_group;
  double macro_mean_ap = 0;  // mean over groups; equals mean_ap when ungrouped
};

MapReport mean_average_precision(std::span<const RankedList> rankings, const Qrels& qrels,
                                 const TaskDefinition& task);

}  // namespace vrag
