// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "test_support.hpp"
#include "vrag/check/oracles.hpp"
#include "vrag/retrieval.hpp"
#include "vrag/synthetic.hpp"

namespace vrag {
namespace {

using testing::error_code_of;
using testing::TempDir;

Embedding vec(std::initializer_list<double> v) {
  Embedding e(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) e[i++] = x;
  return e;
}

// Values exactly representable in f32 so index storage is lossless.
Embedding random_embedding(std::mt19937_64& rng, Eigen::Index d) {
  std::uniform_int_distribution<int> dist(-64, 64);
  Embedding e(d);
  for (Eigen::Index i = 0; i < d; ++i) e[i] = dist(rng) / 16.0;
  return e;
}

std::vector<double> as_vector(const Embedding& e) { return {e.data(), e.data() + e.size()}; }

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double x : r) m(i, j++) = x;
    ++i;
  }
  return m;
}

std::vector<std::string> ids(const RankedList& r) {
  std::vector<std::string> out;
  for (const auto& it : r.items) out.push_back(it.video_id);
  return out;
}

TEST(Index, DuplicatesAndShapes) {
  EmbeddingIndex index(IndexMode::kVideo, 2);
  index.add_video("a", vec({1, 0}));
  EXPECT_EQ(error_code_of([&] { index.add_video("a", vec({0, 1})); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_code_of([&] { index.add_video("b", vec({0, 1, 2})); }), ErrorCode::kShapeMismatch);
  EmbeddingIndex shots(IndexMode::kShot, 2);
  shots.add({"v", 1, {1, 0}});
  shots.add({"v", 2, {0, 1}});
  EXPECT_EQ(error_code_of([&] { shots.add({"v", 2, {1, 1}}); }), ErrorCode::kInvalidArgument);
  ASSERT_EQ(shots.videos().size(), 1u);
  EXPECT_EQ(shots.videos()[0].second.size(), 2u);
}

TEST(Rank, SelfFirstAndTies) {
  EmbeddingIndex index(IndexMode::kVideo, 3);
  index.add_video("c", vec({0, 1, 0}));
  index.add_video("q", vec({1, 2, 3}));
  index.add_video("a", vec({0, 0, 0}));
  auto r = rank("q", vec({1, 2, 3}), index);
  EXPECT_EQ(r.items[0].video_id, "q");
  EXPECT_NEAR(r.items[0].score, 1.0, 1e-7);

  EmbeddingIndex orth(IndexMode::kVideo, 3);
  for (const char* id : {"z", "b", "m"}) orth.add_video(id, vec({0, 1, 0}));
  auto t = rank("x", vec({1, 0, 0}), orth);
  EXPECT_EQ(ids(t), (std::vector<std::string>{"b", "m", "z"}));
  for (const auto& it : t.items) EXPECT_EQ(it.score, 0.0);
}

TEST(Rank, MatchesBruteForce) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    EmbeddingIndex index(IndexMode::kVideo, 4);
    std::vector<std::pair<double, std::string>> expected;
    auto q = random_embedding(rng, 4);
    for (int i = 0; i < 5; ++i) {
      auto e = random_embedding(rng, 4);
      const std::string id = "v" + std::to_string(i);
      index.add_video(id, e);
      expected.emplace_back(-check::reference_cosine(as_vector(q), as_vector(e)), id);
    }
    std::sort(expected.begin(), expected.end());
    auto r = rank("q", q, index);
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_EQ(r.items[i].video_id, expected[i].second);
      EXPECT_NEAR(r.items[i].score, -expected[i].first, 1e-12);
    }
  }
}

TEST(Rank, Errors) {
  EmbeddingIndex empty(IndexMode::kVideo, 2);
  EXPECT_EQ(error_code_of([&] { rank("q", vec({1, 0}), empty); }), ErrorCode::kEmptyInput);
  EmbeddingIndex shots(IndexMode::kShot, 2);
  shots.add({"v", 1, {1, 0}});
  EXPECT_EQ(error_code_of([&] { rank("q", vec({1, 0}), shots); }), ErrorCode::kInvalidArgument);
}

TEST(Rank, ScaleInvariantOrder) {
  std::mt19937_64 rng(2);
  EmbeddingIndex a(IndexMode::kVideo, 6), b(IndexMode::kVideo, 6);
  for (int i = 0; i < 12; ++i) {
    auto e = random_embedding(rng, 6);
    a.add_video("v" + std::to_string(i), e);
    b.add_video("v" + std::to_string(i), e * 4.0);
  }
  auto q = random_embedding(rng, 6);
  EXPECT_EQ(ids(rank("q", q, a)), ids(rank("q", q * 0.5, b)));
}

TEST(ShotMatrix, ShapesAndOracle) {
  std::vector<Embedding> one{vec({1, 2})};
  auto s = shot_similarity_matrix(one, one);
  ASSERT_EQ(s.rows(), 1);
  EXPECT_NEAR(s(0, 0), 1.0, 1e-15);

  std::mt19937_64 rng(3);
  std::vector<Embedding> q, d;
  for (int i = 0; i < 3; ++i) q.push_back(random_embedding(rng, 5));
  for (int i = 0; i < 2; ++i) d.push_back(random_embedding(rng, 5));
  auto m = shot_similarity_matrix(q, d);
  EXPECT_EQ(m.rows(), 3);
  EXPECT_EQ(m.cols(), 2);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(m(i, j), check::reference_cosine(as_vector(q[i]), as_vector(d[j])), 1e-12);
  }
  std::vector<Embedding> none;
  EXPECT_EQ(error_code_of([&] { shot_similarity_matrix(none, d); }), ErrorCode::kEmptyInput);
}

TEST(Chamfer, Examples) {
  EXPECT_EQ(chamfer(from_rows({{1, 0}, {0, 1}})), 1.0);
  EXPECT_NEAR(chamfer(from_rows({{0.5, 0.2}, {0.1, 0.8}})), 0.65, 1e-15);
  EXPECT_EQ(chamfer(from_rows({{0.1, 0.7, -0.2}})), 0.7);
  EXPECT_NEAR(symmetric_chamfer(from_rows({{0.5, 0.2}, {0.1, 0.8}})), 0.65, 1e-15);
  auto sym = from_rows({{0.3, -0.1, 0.9}, {-0.1, 0.2, 0.4}, {0.9, 0.4, 0.5}});
  EXPECT_EQ(symmetric_chamfer(sym), chamfer(sym));
  EXPECT_EQ(error_code_of([] { chamfer(Matrix(0, 2)); }), ErrorCode::kEmptyInput);
}

TEST(Chamfer, OracleBoundsAndSymmetry) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> dim(1, 6);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix s = Matrix::Random(dim(rng), dim(rng));
    auto dense = check::to_dense(s);
    EXPECT_NEAR(chamfer(s), check::reference_chamfer(dense), 1e-12);
    EXPECT_NEAR(symmetric_chamfer(s), check::reference_symmetric_chamfer(dense), 1e-12);
    EXPECT_GE(chamfer(s), s.minCoeff());
    EXPECT_LE(chamfer(s), s.maxCoeff());
    Matrix st = s.transpose();
    EXPECT_EQ(symmetric_chamfer(s), symmetric_chamfer(st));
  }
}

EmbeddingIndex shot_index(const std::vector<std::pair<std::string, std::vector<Embedding>>>& videos,
                          std::size_t dims) {
  EmbeddingIndex index(IndexMode::kShot, dims);
  for (const auto& [id, shots] : videos) {
    std::uint32_t k = 1;
    for (const auto& e : shots) index.add({id, k++, std::vector<float>(e.data(), e.data() + e.size())});
  }
  return index;
}

TEST(ShotRank, SelfScoresOne) {
  std::mt19937_64 rng(5);
  std::vector<Embedding> q{random_embedding(rng, 4), random_embedding(rng, 4), random_embedding(rng, 4)};
  std::vector<Embedding> other{random_embedding(rng, 4)};
  auto index = shot_index({{"other", other}, {"self", q}}, 4);
  for (auto agg : {ShotAggregation::kChamfer, ShotAggregation::kSymmetricChamfer}) {
    auto r = shot_rank("self", q, index, agg);
    EXPECT_EQ(r.items[0].video_id, "self");
    EXPECT_NEAR(r.items[0].score, 1.0, 1e-12);
  }
}

TEST(ShotRank, SingleShotReducesToVideoRank) {
  std::mt19937_64 rng(6);
  EmbeddingIndex video(IndexMode::kVideo, 5);
  std::vector<std::pair<std::string, std::vector<Embedding>>> shots;
  for (int i = 0; i < 8; ++i) {
    auto e = random_embedding(rng, 5);
    video.add_video("v" + std::to_string(i), e);
    shots.push_back({"v" + std::to_string(i), {e}});
  }
  auto index = shot_index(shots, 5);
  auto q = random_embedding(rng, 5);
  std::vector<Embedding> qs{q};
  auto expected = rank("q", q, video);
  for (auto agg : {ShotAggregation::kChamfer, ShotAggregation::kSymmetricChamfer}) {
    auto r = shot_rank("q", qs, index, agg);
    EXPECT_EQ(ids(r), ids(expected));
  }
}

TEST(ShotRank, MatchesBruteForceAggregation) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> count(1, 4);
  std::vector<std::pair<std::string, std::vector<Embedding>>> db;
  for (int v = 0; v < 4; ++v) {
    std::vector<Embedding> s;
    for (int k = count(rng); k > 0; --k) s.push_back(random_embedding(rng, 3));
    db.push_back({"d" + std::to_string(v), s});
  }
  auto index = shot_index(db, 3);
  for (int qi = 0; qi < 3; ++qi) {
    std::vector<Embedding> q;
    for (int k = count(rng); k > 0; --k) q.push_back(random_embedding(rng, 3));
    for (auto agg : {ShotAggregation::kChamfer, ShotAggregation::kSymmetricChamfer}) {
      auto r = shot_rank("q", q, index, agg);
      ASSERT_EQ(r.items.size(), 4u);
      for (const auto& item : r.items) {
        const auto& shots = std::find_if(db.begin(), db.end(), [&](auto& p) { return p.first == item.video_id; })->second;
        check::DenseMatrix s(q.size(), std::vector<double>(shots.size()));
        for (std::size_t i = 0; i < q.size(); ++i) {
          for (std::size_t j = 0; j < shots.size(); ++j) s[i][j] = check::reference_cosine(as_vector(q[i]), as_vector(shots[j]));
        }
        const double expected = agg == ShotAggregation::kChamfer ? check::reference_chamfer(s)
                                                                 : check::reference_symmetric_chamfer(s);
        EXPECT_NEAR(item.score, expected, 1e-12);
      }
      for (std::size_t i = 1; i < r.items.size(); ++i) EXPECT_GE(r.items[i - 1].score, r.items[i].score);
    }
  }
}

TEST(ShotRank, CountsOneEvaluationPerDatabaseVideo) {
  std::mt19937_64 rng(8);
  auto index = shot_index({{"a", {random_embedding(rng, 2), random_embedding(rng, 2)}},
                           {"b", {random_embedding(rng, 2)}},
                           {"c", {random_embedding(rng, 2)}}},
                          2);
  EmbeddingIndex video(IndexMode::kVideo, 2);
  for (int i = 0; i < 5; ++i) video.add_video(std::to_string(i), random_embedding(rng, 2));
  reset_similarity_evaluation_count();
  std::vector<Embedding> q{random_embedding(rng, 2), random_embedding(rng, 2)};
  shot_rank("q", q, index, ShotAggregation::kChamfer);
  rank("q", q[0], video);
  EXPECT_EQ(similarity_evaluation_count(), 3u + 5u);
}

TEST(QueryExpansion, Examples) {
  EmbeddingIndex same(IndexMode::kVideo, 3);
  for (int i = 0; i < 4; ++i) same.add_video(std::to_string(i), vec({1, -2, 0.5}));
  auto expanded = average_query_expansion(vec({1, -2, 0.5}), same, 3);
  EXPECT_LE((expanded - vec({1, -2, 0.5})).cwiseAbs().maxCoeff(), 1e-15);

  EmbeddingIndex pair(IndexMode::kVideo, 2);
  pair.add_video("n", vec({0.5, 1}));
  pair.add_video("far", vec({-1, 0}));
  auto e = average_query_expansion(vec({1, 1}), pair, 1);
  EXPECT_LE((e - vec({0.75, 1})).cwiseAbs().maxCoeff(), 1e-15);

  // k beyond the index size is clamped.
  auto all = average_query_expansion(vec({1, 1}), pair, 10);
  EXPECT_LE((all - vec({0.5 / 3, 2.0 / 3})).cwiseAbs().maxCoeff(), 1e-15);
}

// Mean rank of the query's own group in a ranking that excludes the query.
double own_group_mean_rank(const RankedList& r, const std::string& group) {
  double sum = 0;
  int n = 0;
  for (std::size_t i = 0; i < r.items.size(); ++i) {
    if (r.items[i].video_id.starts_with(group)) {
      sum += static_cast<double>(i + 1);
      ++n;
    }
  }
  return sum / n;
}

TEST(QueryExpansion, HelpsClusteredCorpus) {
  // Gaussian clusters in embedding space, overlapping enough that ranks are imperfect.
  double with_qe = 0, without = 0;
  std::size_t queries = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> n01;
    EmbeddingIndex index(IndexMode::kVideo, 16);
    for (int g = 0; g < 6; ++g) {
      Embedding centre(16);
      for (auto& x : centre) x = n01(rng);
      for (int m = 0; m < 8; ++m) {
        Embedding e = centre;
        for (auto& x : e) x += 0.8f * n01(rng);
        index.add_video("g" + std::to_string(g) + "-" + std::to_string(m), e);
      }
    }
    for (std::size_t i = 0; i < index.size(); ++i) {
      const auto& id = index.entries()[i].video_id;
      const auto group = id.substr(0, id.find('-') + 1);
      auto drop_self = [&](RankedList r) {
        std::erase_if(r.items, [&](const RankedItem& it) { return it.video_id == id; });
        return r;
      };
      auto q = index.embedding(i);
      without += own_group_mean_rank(drop_self(rank(id, q, index)), group);
      with_qe += own_group_mean_rank(drop_self(rank(id, average_query_expansion(q, index, kDefaultQueryExpansionDepth), index)), group);
      ++queries;
    }
  }
  // Premise: clustered (perfect is 4, random is 24) but not perfectly separated.
  ASSERT_LT(without / queries, 8.0);
  ASSERT_GT(without / queries, 4.0);
  EXPECT_LE(with_qe, without);
}

TEST(Emb1, RoundTripBothModes) {
  std::mt19937_64 rng(9);
  TempDir dir;
  EmbeddingIndex video(IndexMode::kVideo, 7);
  for (int i = 0; i < 5; ++i) video.add_video("vid-" + std::to_string(i), Embedding::Random(7));
  write_index(video, dir / "v.emb");
  auto back = read_index(dir / "v.emb");
  EXPECT_EQ(back, video);
  EXPECT_EQ(encode_index(back), encode_index(video));

  EmbeddingIndex shots(IndexMode::kShot, 3);
  shots.add({"x", 1, {1, 2, 3}});
  shots.add({"x", 2, {4, 5, 6}});
  shots.add({"y", 1, {0.1f, 0.2f, 0.3f}});
  EXPECT_EQ(decode_index(encode_index(shots)), shots);
}

TEST(Emb1, Errors) {
  EmbeddingIndex video(IndexMode::kVideo, 2);
  video.add_video("a", vec({1, 2}));
  auto bytes = encode_index(video);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_EQ(error_code_of([&] { decode_index(bad); }), ErrorCode::kBadMagic);
  bad = bytes;
  bad[bad.size() - 5] ^= 1;
  EXPECT_EQ(error_code_of([&] { decode_index(bad); }), ErrorCode::kChecksumMismatch);
  bad = bytes;
  bad.resize(bytes.size() - 3);
  EXPECT_NE(error_code_of([&] { decode_index(bad); }), ErrorCode::kBadMagic);
}

TEST(Rankings, TsvRoundTrip) {
  std::vector<RankedList> rankings{{"q1", {{"a", 0.5}, {"b", -0.25}}}, {"q2", {{"c", 1}}}};
  std::ostringstream out;
  write_rankings(rankings, out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "q1\t1\ta\t0.5");
  std::istringstream in(out.str());
  auto back = read_rankings(in);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].items, rankings[0].items);
  EXPECT_EQ(back[1].query_id, "q2");
}

TEST(AveragePrecision, Examples) {
  std::vector<std::string> ranked{"a", "x", "b", "y"};
  EXPECT_NEAR(average_precision(ranked, {"a", "b"}), (1.0 + 2.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(average_precision(ranked, {"a", "x"}), 1.0);
  // Missing relevant items count in the denominator.
  EXPECT_NEAR(average_precision(ranked, {"a", "zzz"}), 0.5, 1e-15);
}

TEST(AveragePrecision, MatchesQuadraticOracle) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> ranked;
    std::set<std::string> relevant;
    std::bernoulli_distribution coin(0.3);
    const int n = 1 + trial % 25;
    for (int i = 0; i < n; ++i) {
      ranked.push_back("v" + std::to_string(i));
      if (coin(rng)) relevant.insert(ranked.back());
    }
    if (coin(rng)) relevant.insert("unretrieved");
    if (relevant.empty()) continue;
    std::shuffle(ranked.begin(), ranked.end(), rng);
    const double ap = average_precision(ranked, relevant);
    EXPECT_NEAR(ap, check::reference_average_precision(ranked, relevant), 1e-12);
    EXPECT_GE(ap, 0.0);
    EXPECT_LE(ap, 1.0);
    // Dropping a non-relevant item below every relevant one leaves AP unchanged.
    std::size_t last_relevant = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      if (relevant.contains(ranked[i])) last_relevant = i;
    }
    for (std::size_t i = last_relevant + 1; i < ranked.size(); ++i) {
      auto shorter = ranked;
      shorter.erase(shorter.begin() + static_cast<std::ptrdiff_t>(i));
      EXPECT_EQ(average_precision(shorter, relevant), ap);
    }
  }
}

Qrels sample_qrels() {
  std::istringstream in("q1\ta\tND\tev1\nq1\tb\tDS\tev1\nq2\tc\tCS\tev2\nq3\td\tIS\tev2\n");
  return read_qrels(in);
}

TEST(Map, TasksExclusionsAndGroups) {
  auto qrels = sample_qrels();
  std::istringstream tasks_in("DSVR\tND,DS\nCSVR\tND,DS,CS\n");
  auto tasks = read_tasks(tasks_in);
  ASSERT_EQ(tasks.size(), 2u);
  EXPECT_EQ(tasks.at("CSVR").positive_labels.size(), 3u);

  std::vector<RankedList> rankings{{"q1", {{"a", 0.9}, {"x", 0.8}, {"b", 0.7}}},
                                   {"q2", {{"x", 0.9}, {"c", 0.5}}},
                                   {"q3", {}}};
  auto dsvr = mean_average_precision(rankings, qrels, tasks.at("DSVR"));
  EXPECT_NEAR(dsvr.mean_ap, (1.0 + 2.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(dsvr.excluded, (std::vector<std::string>{"q2", "q3"}));

  auto csvr = mean_average_precision(rankings, qrels, tasks.at("CSVR"));
  EXPECT_NEAR(csvr.mean_ap, ((1.0 + 2.0 / 3.0) / 2.0 + 0.5) / 2.0, 1e-15);
  ASSERT_EQ(csvr.per_group.size(), 2u);
  EXPECT_NEAR(csvr.per_group.at("ev2"), 0.5, 1e-15);

  TaskDefinition all{"ALL", {"ND", "DS", "CS", "IS"}};
  auto with_empty = mean_average_precision(rankings, qrels, all);
  EXPECT_EQ(with_empty.flagged, (std::vector<std::string>{"q3"}));
  EXPECT_NEAR(with_empty.per_group.at("ev2"), 0.25, 1e-15);
  EXPECT_NEAR(with_empty.macro_mean_ap, ((1.0 + 2.0 / 3.0) / 2.0 + 0.25) / 2.0, 1e-15);
}

TEST(Map, PerfectRankingIsOne) {
  auto qrels = sample_qrels();
  std::vector<RankedList> rankings{{"q1", {{"b", 1}, {"a", 0.9}, {"x", 0.1}}}};
  auto report = mean_average_precision(rankings, qrels, {"DSVR", {"ND", "DS"}});
  EXPECT_EQ(report.mean_ap, 1.0);
}

TEST(Map, UndeclaredLabelRejected) {
  auto qrels = sample_qrels();
  std::map<std::string, TaskDefinition> tasks{{"DSVR", {"DSVR", {"ND", "DS"}}}};
  EXPECT_EQ(error_code_of([&] { validate_labels(qrels, tasks); }), ErrorCode::kInvalidArgument);
  tasks["ALL"] = {"ALL", {"CS", "IS"}};
  EXPECT_NO_THROW(validate_labels(qrels, tasks));
}

TEST(Map, QrelsTasksRoundTrip) {
  auto qrels = sample_qrels();
  std::ostringstream out;
  write_qrels(qrels, out);
  std::istringstream in(out.str());
  auto back = read_qrels(in);
  EXPECT_EQ(back.labels, qrels.labels);
  EXPECT_EQ(back.query_group, qrels.query_group);

  std::map<std::string, TaskDefinition> tasks{{"T", {"T", {"A", "B"}}}};
  std::ostringstream tout;
  write_tasks(tasks, tout);
  EXPECT_EQ(tout.str(), "T\tA,B\n");
}

}  // namespace
}  // namespace vrag
