// SPDX-License-Identifier: Apache-2.0
//
// vrag: command-line front end for the video retrieval engine.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.
#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <thread>

#include "vrag/check/selfcheck.hpp"
#include "vrag/error.hpp"
#include "vrag/features.hpp"
#include "vrag/model.hpp"
#include "vrag/parallel.hpp"
#include "vrag/retrieval.hpp"
#include "vrag/shots.hpp"
#include "vrag/synthetic.hpp"
#include "vrag/training.hpp"

namespace {

using namespace vrag;
namespace fs = std::filesystem;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
};

// Corpus location: a directory holding manifest.tsv, or a manifest file.
fs::path resolve_manifest(const fs::path& corpus) {
  return fs::is_directory(corpus) ? manifest_path(corpus) : corpus;
}

std::vector<LabeledVideo> load_videos(const fs::path& corpus) {
  return load_corpus(read_manifest(resolve_manifest(corpus)));
}

const std::map<std::string, RegionAggregation> kRegionAgg{
    {"attention", RegionAggregation::kAttention}, {"max", RegionAggregation::kMax}, {"average", RegionAggregation::kAverage}};
const std::map<std::string, Pooling> kPooling{
    {"attention", Pooling::kAttention}, {"max", Pooling::kMax}, {"average", Pooling::kAverage}};
const std::map<std::string, ConcatMode> kConcat{{"all", ConcatMode::kAllLayers},
                                                {"final", ConcatMode::kFinalGraphAttention},
                                                {"all-gat", ConcatMode::kAllGraphAttention},
                                                {"all-gat-fr", ConcatMode::kAllGraphAttentionAndReduced}};
const std::map<std::string, ShotAggregation> kShotAgg{{"cs", ShotAggregation::kChamfer},
                                                      {"scs", ShotAggregation::kSymmetricChamfer}};

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string kind = "groups";
  SynthOptions groups;
  SceneCorpusOptions scenes;
  fs::path out;
};

void add_synth(CLI::App& app, SynthArgs& a, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("synth", "Generate a synthetic region-feature corpus");
  cmd->add_option("--kind", a.kind, "groups: partial-copy groups; scenes: scene-composite queries + database")
      ->check(CLI::IsMember({"groups", "scenes"}))
      ->capture_default_str();
  cmd->add_option("--out", a.out, "Output directory")->required();
  cmd->add_option("--groups", a.groups.groups, "Number of groups")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--per-group", a.groups.videos_per_group, "Videos per group")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--min-frames", a.groups.min_frames, "Shortest video (frames)")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--max-frames", a.groups.max_frames, "Longest video / prototype length (frames)")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--regions", a.groups.regions, "Regions per frame (R)")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--channels", a.groups.channels, "Descriptor channels (C)")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--noise", a.groups.noise_scale, "Per-element Gaussian noise scale")->check(CLI::NonNegativeNumber)->capture_default_str();
  cmd->add_option("--nuisance-dims", a.groups.nuisance_dims, "Shared directions along which each video is offset")->capture_default_str();
  cmd->add_option("--nuisance-scale", a.groups.nuisance_scale, "Standard deviation of the per-video offset")->check(CLI::NonNegativeNumber)->capture_default_str();
  cmd->add_flag("--subsample", a.groups.subsample, "Randomly drop frames after cropping");
  cmd->add_option("--queries", a.scenes.queries, "Scene corpus: number of queries")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--positives", a.scenes.positives_per_query, "Scene corpus: positives per query")->capture_default_str();
  cmd->add_option("--distractors", a.scenes.distractors, "Scene corpus: unrelated database videos")->capture_default_str();
  cmd->add_flag("--single-scene-queries", a.scenes.single_scene_queries, "Scene corpus: queries are one scene long");
  cmd->add_option("--seed", a.groups.seed, "Random seed")->capture_default_str();
  cmd->callback([&] {
    run = [&] {
      if (a.groups.min_frames > a.groups.max_frames) throw UsageError("--min-frames exceeds --max-frames");
      if (a.kind == "groups") {
        auto videos = synth_corpus(a.groups);
        write_corpus(videos, a.out);
        std::cerr << "wrote " << videos.size() << " videos to " << a.out << '\n';
        return;
      }
      a.scenes.regions = a.groups.regions;
      a.scenes.channels = a.groups.channels;
      a.scenes.noise_scale = a.groups.noise_scale;
      a.scenes.seed = a.groups.seed;
      const auto corpus = synth_scene_corpus(a.scenes);
      std::vector<LabeledVideo> queries, database;
      for (const auto& q : corpus.queries) queries.push_back({q, q.video_id()});
      for (const auto& d : corpus.database) database.push_back({d, "db"});
      write_corpus(queries, a.out / "queries");
      write_corpus(database, a.out / "database");
      Qrels qrels;
      for (const auto& [q, d] : corpus.positives) qrels.labels[q][d].insert("DS");
      std::ofstream qrels_out(a.out / "qrels.tsv");
      write_qrels(qrels, qrels_out);
      std::ofstream tasks_out(a.out / "tasks.tsv");
      write_tasks({{"DSVR", {"DSVR", {"DS"}}}}, tasks_out);
      std::cerr << "wrote " << queries.size() << " queries and " << database.size()
                << " database videos to " << a.out << '\n';
    };
  });
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  fs::path corpus, out, loss_csv, init;
  TrainConfig train;
  ModelConfig model;
  std::string region_agg = "attention", pooling = "attention", concat = "all";
  std::uint64_t seed = 0;
};

void add_train(CLI::App& app, TrainArgs& a, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("train", "Train a model with triplet-margin loss");
  cmd->add_option("--corpus", a.corpus, "Corpus directory or manifest file")->required();
  cmd->add_option("--out", a.out, "Output model file")->required();
  cmd->add_option("--loss-csv", a.loss_csv, "Write epoch,iteration,loss history here");
  cmd->add_option("--init", a.init, "Start from this model instead of a fresh initialization");
  cmd->add_option("--epochs", a.train.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--margin", a.train.margin, "Triplet margin m")->check(CLI::NonNegativeNumber)->capture_default_str();
  cmd->add_option("--lr", a.train.adam.learning_rate, "Adam learning rate (fixed)")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--beta1", a.train.adam.beta1, "Adam beta1")->check(CLI::Range(0.0, 0.999999))->capture_default_str();
  cmd->add_option("--beta2", a.train.adam.beta2, "Adam beta2")->check(CLI::Range(0.0, 0.999999))->capture_default_str();
  cmd->add_option("--eps", a.train.adam.epsilon, "Adam epsilon")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--triplets-per-pool", a.train.triplets_per_pool, "Triplets mined per pool")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--pools", a.train.pools, "Triplet pools per epoch")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--clip-frames", a.train.max_clip_frames, "Max clip length W in frames (1 fps)")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--checkpoint", a.train.checkpoint, "Per-epoch checkpoint with optimizer state");
  cmd->add_option("--hidden-dims", a.model.hidden_dims, "Intermediate dims C'")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--layers", a.model.layers, "Graph-attention layers K")->capture_default_str();
  cmd->add_option("--embed-dims", a.model.embedding_dims, "Embedding dims D")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--window", a.model.temporal_window, "Temporal edge window (frames)")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_flag("--tied-attention", a.model.tied_attention, "Share key and query transforms");
  cmd->add_option("--region-agg", a.region_agg, "Neighbor aggregation")->check(CLI::IsMember({"attention", "max", "average"}))->capture_default_str();
  cmd->add_option("--pooling", a.pooling, "Video-level pooling")->check(CLI::IsMember({"attention", "max", "average"}))->capture_default_str();
  cmd->add_option("--concat", a.concat, "Depth concatenation: all, final, all-gat, all-gat-fr")->check(CLI::IsMember({"all", "final", "all-gat", "all-gat-fr"}))->capture_default_str();
  cmd->add_option("--seed", a.seed, "Random seed (initialization and mining)")->capture_default_str();
  cmd->callback([&] {
    run = [&] {
      const auto videos = load_videos(a.corpus);
      if (videos.empty()) throw Error(ErrorCode::kEmptyInput, "corpus is empty");
      ModelParams params;
      if (!a.init.empty()) {
        params = load_params(a.init);
      } else {
        a.model.input_dims = videos.front().features.channels();
        a.model.region_aggregation = kRegionAgg.at(a.region_agg);
        a.model.pooling = kPooling.at(a.pooling);
        a.model.concat = kConcat.at(a.concat);
        params = init_params(a.model, a.seed);
      }
      a.train.seed = a.seed;
      auto result = train(videos, std::move(params), a.train, [](std::size_t epoch, double loss) {
        std::cerr << "epoch " << epoch << " mean loss " << std::setprecision(6) << loss << '\n';
      });
      save_params(result.params, a.out);
      if (!a.loss_csv.empty()) write_loss_csv(result.history, a.loss_csv);
    };
  });
}

// ---------------------------------------------------------------- embed / segment

struct EmbedArgs {
  fs::path model, corpus, out, beta_dump, shots;
  double tau = kDefaultShotThreshold;
};

void add_embed(CLI::App& app, EmbedArgs& a, const Globals& g, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("embed", "Write video-level embeddings (EMB1)");
  cmd->add_option("--model", a.model, "Model file")->required();
  cmd->add_option("--corpus", a.corpus, "Corpus directory or manifest file")->required();
  cmd->add_option("--out", a.out, "Output EMB1 file")->required();
  cmd->add_option("--beta-dump", a.beta_dump, "Write per-node pooling weights (node, frame, beta) here");
  cmd->callback([&] {
    run = [&] {
      const auto params = load_params(a.model);
      const auto videos = load_videos(a.corpus);
      std::vector<Embedding> embeddings(videos.size());
      std::vector<std::string> dumps(videos.size());
      const bool dump = !a.beta_dump.empty();
      parallel_for(videos.size(), g.threads, [&](std::size_t i) {
        ForwardTrace trace;
        embeddings[i] = embed_video(params, videos[i].features, dump ? &trace : nullptr);
        if (dump) {
          std::ostringstream s;
          s << "# " << videos[i].features.video_id() << '\n';
          write_beta_dump(trace, s);
          dumps[i] = s.str();
        }
      });
      EmbeddingIndex index(IndexMode::kVideo, params.config.embedding_dims);
      for (std::size_t i = 0; i < videos.size(); ++i) index.add_video(videos[i].features.video_id(), embeddings[i]);
      write_index(index, a.out);
      if (dump) {
        std::ofstream out(a.beta_dump);
        for (const auto& d : dumps) out << d;
      }
      std::cerr << "embedded " << videos.size() << " videos\n";
    };
  });
}

void add_segment(CLI::App& app, EmbedArgs& a, const Globals& g, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("segment", "Detect shots and write shot-level embeddings (EMB1)");
  cmd->add_option("--model", a.model, "Model file")->required();
  cmd->add_option("--corpus", a.corpus, "Corpus directory or manifest file")->required();
  cmd->add_option("--out", a.out, "Output EMB1 file (shot mode)")->required();
  cmd->add_option("--shots", a.shots, "Write video_id, shot_idx, start, end per shot here");
  cmd->add_option("--tau", a.tau, "Shot boundary cosine threshold")->check(CLI::Range(-1.0, 1.0))->capture_default_str();
  cmd->callback([&] {
    run = [&] {
      const auto params = load_params(a.model);
      const auto videos = load_videos(a.corpus);
      std::vector<ShotSet> sets(videos.size());
      parallel_for(videos.size(), g.threads, [&](std::size_t i) {
        sets[i] = embed_shots(params, videos[i].features, a.tau);
      });
      EmbeddingIndex index(IndexMode::kShot, params.config.embedding_dims);
      std::size_t shots = 0;
      for (const auto& s : sets) {
        index.add_shots(s);
        shots += s.shots.size();
      }
      write_index(index, a.out);
      if (!a.shots.empty()) {
        std::ofstream out(a.shots);
        write_shot_manifest(sets, out);
      }
      std::cerr << "segmented " << videos.size() << " videos into " << shots << " shots\n";
    };
  });
}

// ---------------------------------------------------------------- query / eval

struct QueryArgs {
  fs::path queries, index, out, rankings, qrels, tasks;
  std::string aggregation = "cs";
  std::string task;
  std::size_t qe = 0;
  std::size_t top = 0;
  bool exclude_self = false;
  bool include_self = false;
};

std::vector<RankedList> run_queries(const QueryArgs& a, bool exclude_self, const Globals& g) {
  const auto queries = read_index(a.queries);
  const auto index = read_index(a.index);
  if (queries.mode() != index.mode()) {
    throw Error(ErrorCode::kInvalidArgument, "query and index files differ in granularity (video vs shot)");
  }
  if (queries.dims() != index.dims()) throw Error(ErrorCode::kShapeMismatch, "query and index dims differ");
  if (a.qe > 0 && index.mode() == IndexMode::kShot) throw UsageError("--qe applies to video-level files only");

  std::vector<RankedList> out(queries.videos().size());
  parallel_for(out.size(), g.threads, [&](std::size_t q) {
    const auto& [query_id, slots] = queries.videos()[q];
    if (index.mode() == IndexMode::kVideo) {
      Embedding e = queries.embedding(slots.front());
      if (a.qe > 0) e = average_query_expansion(e, index, a.qe);
      out[q] = rank(query_id, e, index);
    } else {
      std::vector<Embedding> shots;
      for (auto s : slots) shots.push_back(queries.embedding(s));
      out[q] = shot_rank(query_id, shots, index, kShotAgg.at(a.aggregation));
    }
  });
  for (auto& r : out) {
    if (exclude_self) std::erase_if(r.items, [&](const RankedItem& it) { return it.video_id == r.query_id; });
    if (a.top > 0 && r.items.size() > a.top) r.items.resize(a.top);
  }
  return out;
}

void add_query_options(CLI::App* cmd, QueryArgs& a, bool required) {
  auto* q = cmd->add_option("--queries", a.queries, "Query EMB1 file");
  auto* i = cmd->add_option("--index", a.index, "Database EMB1 file");
  if (required) {
    q->required();
    i->required();
  }
  cmd->add_option("--aggregation", a.aggregation, "Shot-level aggregation: cs or scs")->check(CLI::IsMember({"cs", "scs"}))->capture_default_str();
  cmd->add_option("--qe", a.qe, "Average query expansion depth (0 = off; typical 5)")->capture_default_str();
}

void add_query(CLI::App& app, QueryArgs& a, const Globals& g, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("query", "Rank database videos for every query");
  add_query_options(cmd, a, true);
  cmd->add_option("--out", a.out, "Rankings TSV (default: standard output)");
  cmd->add_option("--top", a.top, "Keep only the first N results per query (0 = all)")->capture_default_str();
  cmd->add_flag("--exclude-self", a.exclude_self, "Drop the database entry whose id equals the query id");
  cmd->callback([&] {
    run = [&] {
      const auto rankings = run_queries(a, a.exclude_self, g);
      if (a.out.empty()) {
        write_rankings(rankings, std::cout);
      } else {
        std::ofstream out(a.out);
        if (!out) throw Error(ErrorCode::kIo, "cannot write " + a.out.string());
        write_rankings(rankings, out);
      }
    };
  });
}

void add_eval(CLI::App& app, QueryArgs& a, const Globals& g, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("eval", "Compute mAP against relevance judgements");
  add_query_options(cmd, a, false);
  cmd->add_option("--rankings", a.rankings, "Evaluate an existing rankings TSV instead of running queries");
  cmd->add_option("--qrels", a.qrels, "Qrels: query_id, video_id, label[, group]")->required();
  cmd->add_option("--tasks", a.tasks, "Task file: name, comma-separated positive labels")->required();
  cmd->add_option("--task", a.task, "Evaluate only this task (default: all)");
  cmd->add_flag("--include-self", a.include_self, "Keep the query's own id in its ranking");
  cmd->callback([&] {
    run = [&] {
      std::vector<RankedList> rankings;
      if (!a.rankings.empty()) {
        std::ifstream in(a.rankings);
        if (!in) throw Error(ErrorCode::kIo, "cannot open " + a.rankings.string());
        rankings = read_rankings(in);
      } else {
        if (a.queries.empty() || a.index.empty()) throw UsageError("eval needs --rankings or --queries and --index");
        rankings = run_queries(a, !a.include_self, g);
      }
      std::ifstream qrels_in(a.qrels), tasks_in(a.tasks);
      if (!qrels_in || !tasks_in) throw Error(ErrorCode::kIo, "cannot open qrels or task file");
      const auto qrels = read_qrels(qrels_in);
      const auto tasks = read_tasks(tasks_in);
      validate_labels(qrels, tasks);
      if (!a.task.empty() && !tasks.contains(a.task)) throw UsageError("unknown task " + a.task);
      std::cout << std::fixed << std::setprecision(4);
      for (const auto& [name, task] : tasks) {
        if (!a.task.empty() && name != a.task) continue;
        const auto report = mean_average_precision(rankings, qrels, task);
        std::cout << "task\t" << name << "\nmAP\t" << report.mean_ap << '\n';
        if (!report.per_group.empty()) {
          std::cout << "macro_mAP\t" << report.macro_mean_ap << '\n';
          for (const auto& [group, ap] : report.per_group) std::cout << "group\t" << group << '\t' << ap << '\n';
        }
        for (const auto& [query, ap] : report.per_query) std::cout << "AP\t" << query << '\t' << ap << '\n';
        for (const auto& q : report.excluded) std::cout << "excluded\t" << q << "\tno positives\n";
        for (const auto& q : report.flagged) std::cout << "flagged\t" << q << "\tempty ranking\n";
      }
    };
  });
}

// ---------------------------------------------------------------- selfcheck

void add_selfcheck(CLI::App& app, check::SelfCheckOptions& o, std::function<void()>& run, int& status) {
  auto* cmd = app.add_subcommand("selfcheck", "Run the embedded invariant and oracle checks");
  cmd->add_option("--tolerance-scale", o.tolerance_scale, "Scale all tolerances (testing hook)")
      ->group("")  // hidden
      ->check(CLI::NonNegativeNumber);
  cmd->callback([&] {
    run = [&] {
      bool ok = true;
      for (const auto& c : check::run_selfcheck(o)) {
        std::cout << (c.passed ? "PASS  " : "FAIL  ") << c.name << "  (" << c.detail << ")\n";
        ok = ok && c.passed;
      }
      status = ok ? 0 : kExitRuntime;
    };
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Region attention graph video retrieval engine"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file overriding defaults");
  Globals globals;
  app.add_option("--threads", globals.threads, "Worker threads for embedding and ranking")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::function<void()> run;
  int status = 0;
  SynthArgs synth;
  TrainArgs train_args;
  EmbedArgs embed_args, segment_args;
  QueryArgs query_args, eval_args;
  check::SelfCheckOptions selfcheck;
  add_synth(app, synth, run);
  add_train(app, train_args, run);
  add_embed(app, embed_args, globals, run);
  add_segment(app, segment_args, globals, run);
  add_query(app, query_args, globals, run);
  add_eval(app, eval_args, globals, run);
  add_selfcheck(app, selfcheck, run, status);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (run) run();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return status;
}
