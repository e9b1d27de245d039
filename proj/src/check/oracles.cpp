// SPDX-License-Identifier: Apache-2.0
#include "vrag/check/oracles.hpp"

#include <cmath>
#include <limits>

namespace vrag::check {
namespace {

double elu_ref(double x) { return x > 0 ? x : std::exp(x) - 1.0; }

// y = x W + b with W given as an Eigen matrix (read element-wise only).
std::vector<double> affine(const std::vector<double>& x, const Matrix& w, const RowVector& b) {
  std::vector<double> y(static_cast<std::size_t>(w.cols()), 0.0);
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    double s = b[j];
    for (Eigen::Index i = 0; i < w.rows(); ++i) s += x[static_cast<std::size_t>(i)] * w(i, j);
    y[static_cast<std::size_t>(j)] = s;
  }
  return y;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::size_t frame_gap(std::size_t i, std::size_t j, std::size_t regions) {
  const std::size_t fi = i / regions, fj = j / regions;
  return fi > fj ? fi - fj : fj - fi;
}

}  // namespace

DenseMatrix to_dense(const Matrix& m) {
  DenseMatrix d(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return d;
}

std::set<std::pair<std::size_t, std::size_t>> brute_force_adjacency(std::size_t frames,
                                                                    std::size_t regions,
                                                                    std::size_t window) {
  std::set<std::pair<std::size_t, std::size_t>> edges;
  const std::size_t n = frames * regions;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (frame_gap(i, j, regions) <= window) edges.emplace(i, j);
  return edges;
}

DenseMatrix reference_reduce(const ModelParams& params, const DenseMatrix& input) {
  DenseMatrix out;
  for (const auto& row : input) {
    auto y = affine(row, params.reduce_weight, params.reduce_bias);
    for (auto& v : y) v = elu_ref(v);
    out.push_back(std::move(y));
  }
  return out;
}

ReferenceLayer reference_gat_layer(const ModelParams& params, std::size_t layer, std::size_t frames,
                                   std::size_t regions, const DenseMatrix& input) {
  const auto& p = params.layers[layer];
  const std::size_t n = frames * regions;
  ReferenceLayer out;
  for (const auto& row : input) {
    out.query.push_back(affine(row, p.query_weight, p.query_bias));
    out.key.push_back(params.config.tied_attention ? out.query.back()
                                                   : affine(row, p.key_weight, p.key_bias));
  }
  DenseMatrix scores(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) scores[i][j] = dot(out.query[i], out.key[j]);

  out.affinity.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out.affinity[i] += scores[i][j];
    out.affinity[i] /= static_cast<double>(n);
  }

  out.attention.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> masked(n);
    double row_max = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      masked[j] = frame_gap(i, j, regions) <= params.config.temporal_window
                      ? scores[i][j]
                      : -std::numeric_limits<double>::infinity();
      row_max = std::max(row_max, masked[j]);
    }
    double z = 0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(masked[j] - row_max);
    for (std::size_t j = 0; j < n; ++j) out.attention[i][j] = std::exp(masked[j] - row_max) / z;
  }

  const std::size_t width = input.empty() ? 0 : input[0].size();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> message(width, 0.0);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t c = 0; c < width; ++c) message[c] += out.attention[i][j] * input[j][c];
    auto y = affine(message, p.output_weight, p.output_bias);
    for (auto& v : y) v = elu_ref(v);
    out.output.push_back(std::move(y));
  }
  return out;
}

ReferencePool reference_attention_pool(const ModelParams& params, const DenseMatrix& regions,
                                       const std::vector<DenseMatrix>& queries,
                                       const std::vector<DenseMatrix>& keys) {
  const std::size_t n = regions.size();
  std::vector<double> logits(n, params.attention_bias[0]);
  for (std::size_t k = 0; k < queries.size(); ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      double mean = 0;
      for (std::size_t j = 0; j < n; ++j) mean += dot(queries[k][i], keys[k][j]);
      mean /= static_cast<double>(n);
      logits[i] += params.attention_weight[static_cast<Eigen::Index>(k)] * mean;
    }
  }
  double row_max = -std::numeric_limits<double>::infinity();
  for (double l : logits) row_max = std::max(row_max, l);
  ReferencePool out;
  double z = 0;
  for (double l : logits) z += std::exp(l - row_max);
  for (double l : logits) out.beta.push_back(std::exp(l - row_max) / z);
  out.pooled.assign(regions.empty() ? 0 : regions[0].size(), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < out.pooled.size(); ++c) out.pooled[c] += out.beta[i] * regions[i][c];
  return out;
}

std::vector<double> reference_mlp(const ModelParams& params, const std::vector<double>& pooled) {
  auto hidden = affine(pooled, params.hidden_weight, params.hidden_bias);
  for (auto& v : hidden) v = elu_ref(v);
  return affine(hidden, params.output_weight, params.output_bias);
}

std::vector<double> reference_embed(const ModelParams& params, const RegionFeatureTensor& tensor) {
  const std::size_t n = tensor.nodes(), c = tensor.channels();
  DenseMatrix x(n, std::vector<double>(c));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) x[i][j] = tensor.data()[i * c + j];
  std::vector<DenseMatrix> outputs{reference_reduce(params, x)};
  std::vector<DenseMatrix> queries, keys;
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    auto layer = reference_gat_layer(params, k, tensor.frames(), tensor.regions(), outputs.back());
    queries.push_back(layer.query);
    keys.push_back(layer.key);
    outputs.push_back(layer.output);
  }
  DenseMatrix regions(n);
  for (std::size_t i = 0; i < n; ++i) {
    regions[i] = x[i];
    for (const auto& o : outputs) regions[i].insert(regions[i].end(), o[i].begin(), o[i].end());
  }
  auto pool = reference_attention_pool(params, regions, queries, keys);
  return reference_mlp(params, pool.pooled);
}

double reference_cosine(const std::vector<double>& u, const std::vector<double>& v) {
  const double nu = std::sqrt(dot(u, u)), nv = std::sqrt(dot(v, v));
  if (nu < 1e-12 || nv < 1e-12) return 0.0;
  return dot(u, v) / (nu * nv);
}

double reference_chamfer(const DenseMatrix& s) {
  double total = 0;
  for (const auto& row : s) {
    double best = -std::numeric_limits<double>::infinity();
    for (double v : row) best = v > best ? v : best;
    total += best;
  }
  return total / static_cast<double>(s.size());
}

double reference_symmetric_chamfer(const DenseMatrix& s) {
  DenseMatrix t(s[0].size(), std::vector<double>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s[0].size(); ++j) t[j][i] = s[i][j];
  return 0.5 * (reference_chamfer(s) + reference_chamfer(t));
}

double reference_average_precision(const std::vector<std::string>& ranked,
                                   const std::set<std::string>& relevant) {
  if (relevant.empty()) return 0.0;
  double sum = 0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    if (!relevant.contains(ranked[k])) continue;
    std::size_t hits = 0;
    for (std::size_t j = 0; j <= k; ++j) hits += relevant.contains(ranked[j]) ? 1 : 0;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return sum / static_cast<double>(relevant.size());
}

}  // namespace vrag::check
