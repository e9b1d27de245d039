// SPDX-License-Identifier: Apache-2.0
#include "vrag/check/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "vrag/check/gradcheck.hpp"
#include "vrag/check/oracles.hpp"
#include "vrag/graph.hpp"
#include "vrag/retrieval.hpp"

namespace vrag::check {
namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

RegionFeatureTensor random_tensor(std::mt19937_64& rng, std::size_t t, std::size_t r, std::size_t c) {
  std::normal_distribution<double> dist;
  std::vector<float> data(t * r * c);
  for (auto& v : data) v = static_cast<float>(dist(rng));
  return RegionFeatureTensor("x", t, r, c, std::move(data));
}

CheckOutcome gradient_check(const SelfCheckOptions& o) {
  std::size_t checked = 0, failures = 0;
  double worst = 0;
  for (std::uint64_t i = 0; i < 6; ++i) {
    const auto r = check_triplet_gradients(random_tiny_instance(o.seed + i, i % 2 == 0), 1e-5,
                                           1e-4 * o.tolerance_scale, 1e-8 * o.tolerance_scale);
    checked += r.checked;
    failures += r.failures;
    worst = std::max(worst, r.max_abs_error);
  }
  return {"gradient vs central differences", failures == 0,
          std::to_string(checked) + " entries, " + std::to_string(failures) + " outside tolerance, max abs err " + fmt(worst)};
}

CheckOutcome graph_check(const SelfCheckOptions& o) {
  std::mt19937_64 rng(o.seed);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t t = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
    const std::size_t r = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
    const auto graph = build_region_graph(t, r);
    std::set<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < graph.nodes(); ++i)
      for (auto j : graph.neighbors(i)) edges.emplace(i, j);
    if (edges != brute_force_adjacency(t, r)) ++mismatches;
  }
  return {"graph adjacency vs brute force", mismatches == 0, "30 random (T, R), " + std::to_string(mismatches) + " mismatches"};
}

CheckOutcome layer_and_pool_check(const SelfCheckOptions& o) {
  std::mt19937_64 rng(o.seed + 1);
  double worst = 0;
  for (int trial = 0; trial < 5; ++trial) {
    ModelConfig c;
    c.input_dims = 5;
    c.hidden_dims = 3;
    c.layers = 2;
    c.embedding_dims = 4;
    const auto params = init_params(c, o.seed + 10 + static_cast<std::uint64_t>(trial));
    const auto x = random_tensor(rng, 3, 2, c.input_dims);
    ForwardTrace trace;
    const Embedding v = embed_video(params, x, &trace);
    const auto ref = reference_embed(params, x);
    for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(ref[i] - v[static_cast<Eigen::Index>(i)]));
    auto dense_in = to_dense(trace.reduced);
    const auto layer = reference_gat_layer(params, 0, 3, 2, dense_in);
    for (std::size_t i = 0; i < layer.affinity.size(); ++i)
      worst = std::max(worst, std::abs(layer.affinity[i] - trace.layers[0].affinity[static_cast<Eigen::Index>(i)]));
  }
  const double tol = 1e-10 * o.tolerance_scale;
  return {"graph attention + pooling vs dense oracle", worst <= tol, "max abs err " + fmt(worst)};
}

CheckOutcome chamfer_check(const SelfCheckOptions& o) {
  std::mt19937_64 rng(o.seed + 2);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = std::uniform_int_distribution<Eigen::Index>(1, 5)(rng);
    const auto m = std::uniform_int_distribution<Eigen::Index>(1, 5)(rng);
    Matrix s(n, m);
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = u(rng);
    const auto d = to_dense(s);
    worst = std::max(worst, std::abs(chamfer(s) - reference_chamfer(d)));
    worst = std::max(worst, std::abs(symmetric_chamfer(s) - reference_symmetric_chamfer(d)));
  }
  return {"Chamfer / symmetric Chamfer vs naive loops", worst <= 1e-12 * o.tolerance_scale, "max abs err " + fmt(worst)};
}

CheckOutcome map_check(const SelfCheckOptions& o) {
  std::mt19937_64 rng(o.seed + 3);
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 20)(rng);
    std::vector<std::string> ids;
    std::set<std::string> relevant;
    for (std::size_t i = 0; i < n; ++i) {
      ids.push_back("v" + std::to_string(i));
      if (std::bernoulli_distribution(0.3)(rng)) relevant.insert(ids.back());
    }
    if (std::bernoulli_distribution(0.3)(rng)) relevant.insert("unretrieved");
    std::shuffle(ids.begin(), ids.end(), rng);
    worst = std::max(worst, std::abs(average_precision(ids, relevant) - reference_average_precision(ids, relevant)));
  }
  return {"average precision vs quadratic oracle", worst <= 1e-12 * o.tolerance_scale, "max abs err " + fmt(worst)};
}

}  // namespace

std::vector<CheckOutcome> run_selfcheck(const SelfCheckOptions& options) {
  return {gradient_check(options), graph_check(options), layer_and_pool_check(options),
          chamfer_check(options), map_check(options)};
}

}  // namespace vrag::check
