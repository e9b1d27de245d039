// SPDX-License-Identifier: Apache-2.0
#include "vrag/model.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>
#include <ostream>
#include <random>
#include <string>

#include "vrag/error.hpp"

namespace vrag {
namespace {

std::atomic<std::uint64_t> g_encoder_passes{0};

void require_shape(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kShapeMismatch, what);
}

Matrix elu(const Matrix& z) { return z.unaryExpr([](double x) { return vrag::elu(x); }); }

RowVector elu(const RowVector& z) { return z.unaryExpr([](double x) { return vrag::elu(x); }); }

void fill_uniform(Matrix& m, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

void fill_uniform(RowVector& v, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = dist(rng);
}

}  // namespace

double elu(double x) { return x > 0 ? x : std::expm1(x); }

void validate(const ModelConfig& c) {
  if (c.input_dims < 1 || c.hidden_dims < 1 || c.embedding_dims < 1) {
    throw Error(ErrorCode::kInvalidArgument, "model dims C, C', D must be >= 1");
  }
  if (c.layers < 1 && (c.concat == ConcatMode::kFinalGraphAttention ||
                       c.concat == ConcatMode::kAllGraphAttention)) {
    throw Error(ErrorCode::kInvalidArgument, "concat mode needs at least one graph-attention layer");
  }
  if (c.temporal_window < 1) {
    throw Error(ErrorCode::kInvalidArgument, "temporal window must be >= 1");
  }
  if (static_cast<std::uint8_t>(c.region_aggregation) > 2 || static_cast<std::uint8_t>(c.pooling) > 2 ||
      static_cast<std::uint8_t>(c.concat) > 3) {
    throw Error(ErrorCode::kInvalidArgument, "unknown ablation mode");
  }
}

std::size_t concat_width(const ModelConfig& c) {
  switch (c.concat) {
    case ConcatMode::kAllLayers: return c.input_dims + (c.layers + 1) * c.hidden_dims;
    case ConcatMode::kFinalGraphAttention: return c.hidden_dims;
    case ConcatMode::kAllGraphAttention: return c.layers * c.hidden_dims;
    case ConcatMode::kAllGraphAttentionAndReduced: return (c.layers + 1) * c.hidden_dims;
  }
  return 0;
}

ModelParams zeros_like(const ModelConfig& config) {
  validate(config);
  const auto c = static_cast<Eigen::Index>(config.input_dims);
  const auto h = static_cast<Eigen::Index>(config.hidden_dims);
  const auto k = static_cast<Eigen::Index>(config.layers);
  const auto d = static_cast<Eigen::Index>(config.embedding_dims);
  const auto w = static_cast<Eigen::Index>(concat_width(config));
  ModelParams p;
  p.config = config;
  p.reduce_weight = Matrix::Zero(c, h);
  p.reduce_bias = RowVector::Zero(h);
  p.layers.resize(config.layers);
  for (auto& layer : p.layers) {
    layer.query_weight = Matrix::Zero(h, h);
    layer.query_bias = RowVector::Zero(h);
    layer.key_weight = Matrix::Zero(h, h);
    layer.key_bias = RowVector::Zero(h);
    layer.output_weight = Matrix::Zero(h, h);
    layer.output_bias = RowVector::Zero(h);
  }
  p.attention_weight = RowVector::Zero(k);
  p.attention_bias = RowVector::Zero(1);
  p.hidden_weight = Matrix::Zero(w, d);
  p.hidden_bias = RowVector::Zero(d);
  p.output_weight = Matrix::Zero(d, d);
  p.output_bias = RowVector::Zero(d);
  return p;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p = zeros_like(config);
  std::mt19937_64 rng(seed);
  fill_uniform(p.reduce_weight, rng);
  for (auto& layer : p.layers) {
    fill_uniform(layer.query_weight, rng);
    fill_uniform(layer.key_weight, rng);
    fill_uniform(layer.output_weight, rng);
  }
  // f_att maps K affinities to one logit.
  fill_uniform(p.attention_weight, config.layers, 1, rng);
  fill_uniform(p.hidden_weight, rng);
  fill_uniform(p.output_weight, rng);
  return p;
}

std::size_t parameter_count(const ModelParams& params) {
  std::size_t n = 0;
  for_each_tensor(params, [&](std::string_view, std::span<const double> t) { n += t.size(); });
  return n;
}

void validate(const ModelParams& params) {
  validate(params.config);
  const ModelParams shape = zeros_like(params.config);
  require_shape(params.layers.size() == shape.layers.size(), "layer count differs from config");
  std::vector<std::size_t> expected;
  for_each_tensor(shape, [&](std::string_view, std::span<const double> t) { expected.push_back(t.size()); });
  std::size_t i = 0;
  for_each_tensor(params, [&](std::string_view name, std::span<const double> t) {
    require_shape(t.size() == expected[i++], std::string(name) + " has the wrong size");
    for (double v : t) {
      if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, std::string(name));
    }
  });
  require_shape(params.reduce_weight.rows() == shape.reduce_weight.rows() &&
                    params.hidden_weight.rows() == shape.hidden_weight.rows(),
                "weight matrix orientation differs from config");
}

bool bitwise_equal(const ModelParams& a, const ModelParams& b) {
  if (!(a.config == b.config) || a.layers.size() != b.layers.size()) return false;
  std::vector<std::span<const double>> ta, tb;
  for_each_tensor(a, [&](std::string_view, std::span<const double> t) { ta.push_back(t); });
  for_each_tensor(b, [&](std::string_view, std::span<const double> t) { tb.push_back(t); });
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i].size() != tb[i].size() ||
        std::memcmp(ta[i].data(), tb[i].data(), ta[i].size_bytes()) != 0) {
      return false;
    }
  }
  return true;
}

Matrix region_matrix(const RegionFeatureTensor& tensor) {
  const auto n = static_cast<Eigen::Index>(tensor.nodes());
  const auto c = static_cast<Eigen::Index>(tensor.channels());
  Matrix x(n, c);
  auto data = tensor.data();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) x(i, j) = data[static_cast<std::size_t>(i * c + j)];
  }
  return x;
}

Matrix reduce_dims(const ModelParams& params, const Matrix& input) {
  require_shape(input.cols() == params.reduce_weight.rows(),
                "input has " + std::to_string(input.cols()) + " channels, model expects " +
                    std::to_string(params.reduce_weight.rows()));
  Matrix z = input * params.reduce_weight;
  z.rowwise() += params.reduce_bias;
  return elu(z);
}

GraphLayerOutput gat_layer_forward(const ModelParams& params, std::size_t layer,
                                   const RegionGraph& graph, const Matrix& input) {
  require_shape(layer < params.layers.size(), "layer index out of range");
  const auto& p = params.layers[layer];
  const auto n = static_cast<Eigen::Index>(graph.nodes());
  require_shape(input.rows() == n, "region matrix rows differ from graph node count");
  require_shape(input.cols() == p.query_weight.rows(), "region matrix width differs from C'");

  GraphLayerOutput out;
  out.query = input * p.query_weight;
  out.query.rowwise() += p.query_bias;
  if (params.config.tied_attention) {
    out.key = out.query;
  } else {
    out.key = input * p.key_weight;
    out.key.rowwise() += p.key_bias;
  }
  out.mean_key = out.key.colwise().mean();
  // Row mean of A B^T equals A times the mean row of B.
  out.affinity = out.query * out.mean_key.transpose();

  out.weights.resize(graph.edge_count());
  out.message = Matrix::Zero(n, input.cols());
  const auto mode = params.config.region_aggregation;
  if (mode == RegionAggregation::kMax) {
    out.argmax.assign(static_cast<std::size_t>(n * input.cols()), 0);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto node = static_cast<std::size_t>(i);
    auto nbrs = graph.neighbors(node);
    double* w = out.weights.data() + graph.edge_offset(node);
    double max_score = -std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < nbrs.size(); ++e) {
      const double s = out.query.row(i).dot(out.key.row(static_cast<Eigen::Index>(nbrs[e])));
      if (std::isnan(s) || std::isinf(s)) {
        throw Error(ErrorCode::kNonFinite, "attention score for node " + std::to_string(node));
      }
      w[e] = s;
      max_score = std::max(max_score, s);
    }
    double total = 0;
    for (std::size_t e = 0; e < nbrs.size(); ++e) {
      w[e] = std::exp(w[e] - max_score);
      total += w[e];
    }
    for (std::size_t e = 0; e < nbrs.size(); ++e) w[e] /= total;

    switch (mode) {
      case RegionAggregation::kAttention:
        for (std::size_t e = 0; e < nbrs.size(); ++e) {
          out.message.row(i) += w[e] * input.row(static_cast<Eigen::Index>(nbrs[e]));
        }
        break;
      case RegionAggregation::kAverage:
        for (auto j : nbrs) out.message.row(i) += input.row(static_cast<Eigen::Index>(j));
        out.message.row(i) /= static_cast<double>(nbrs.size());
        break;
      case RegionAggregation::kMax:
        for (Eigen::Index c = 0; c < input.cols(); ++c) {
          std::size_t best = nbrs[0];
          for (auto j : nbrs) {
            if (input(static_cast<Eigen::Index>(j), c) > input(static_cast<Eigen::Index>(best), c)) best = j;
          }
          out.message(i, c) = input(static_cast<Eigen::Index>(best), c);
          out.argmax[static_cast<std::size_t>(i * input.cols() + c)] = best;
        }
        break;
    }
  }
  Matrix z = out.message * p.output_weight;
  z.rowwise() += p.output_bias;
  out.output = elu(z);
  return out;
}

Matrix depth_concat(const Matrix& input, std::span<const Matrix> layer_outputs, ConcatMode mode) {
  if (layer_outputs.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "depth concatenation needs X(0)");
  }
  std::vector<const Matrix*> parts;
  switch (mode) {
    case ConcatMode::kAllLayers:
      parts.push_back(&input);
      for (const auto& m : layer_outputs) parts.push_back(&m);
      break;
    case ConcatMode::kFinalGraphAttention:
      if (layer_outputs.size() < 2) throw Error(ErrorCode::kInvalidArgument, "no graph-attention output");
      parts.push_back(&layer_outputs.back());
      break;
    case ConcatMode::kAllGraphAttention:
      if (layer_outputs.size() < 2) throw Error(ErrorCode::kInvalidArgument, "no graph-attention output");
      for (std::size_t k = 1; k < layer_outputs.size(); ++k) parts.push_back(&layer_outputs[k]);
      break;
    case ConcatMode::kAllGraphAttentionAndReduced:
      for (const auto& m : layer_outputs) parts.push_back(&m);
      break;
  }
  Eigen::Index width = 0;
  for (const auto* m : parts) {
    require_shape(m->rows() == parts[0]->rows(), "concatenated region matrices differ in N");
    width += m->cols();
  }
  Matrix r(parts[0]->rows(), width);
  Eigen::Index col = 0;
  for (const auto* m : parts) {
    r.middleCols(col, m->cols()) = *m;
    col += m->cols();
  }
  return r;
}

PoolingOutput attention_pool(const ModelParams& params, const Matrix& regions,
                             const Matrix& affinity, Pooling mode) {
  const Eigen::Index n = regions.rows();
  if (n == 0) throw Error(ErrorCode::kEmptyInput, "cannot pool zero regions");
  require_shape(regions.cols() == params.hidden_weight.rows(), "region width differs from head input");
  PoolingOutput out;
  switch (mode) {
    case Pooling::kAttention: {
      require_shape(affinity.rows() == n && affinity.cols() == params.attention_weight.size(),
                    "affinity matrix must be N x K");
      out.logits = affinity * params.attention_weight.transpose();
      out.logits.array() += params.attention_bias[0];
      const double max_logit = out.logits.maxCoeff();
      out.beta = (out.logits.array() - max_logit).exp();
      out.beta /= out.beta.sum();
      out.pooled = out.beta.transpose() * regions;
      break;
    }
    case Pooling::kAverage:
      out.pooled = regions.colwise().mean();
      break;
    case Pooling::kMax:
      out.pooled.resize(regions.cols());
      out.argmax.resize(static_cast<std::size_t>(regions.cols()));
      for (Eigen::Index c = 0; c < regions.cols(); ++c) {
        Eigen::Index best = 0;
        out.pooled[c] = regions.col(c).maxCoeff(&best);
        out.argmax[static_cast<std::size_t>(c)] = best;
      }
      break;
  }
  return out;
}

HeadOutput mlp_head(const ModelParams& params, const RowVector& pooled) {
  require_shape(pooled.size() == params.hidden_weight.rows(),
                "pooled width " + std::to_string(pooled.size()) + " differs from head input " +
                    std::to_string(params.hidden_weight.rows()));
  HeadOutput out;
  out.hidden = elu(RowVector(pooled * params.hidden_weight + params.hidden_bias));
  out.embedding = out.hidden * params.output_weight + params.output_bias;
  return out;
}

Embedding embed_video(const ModelParams& params, const RegionFeatureTensor& tensor,
                      ForwardTrace* trace) {
  validate(tensor);
  require_shape(tensor.channels() == params.config.input_dims,
                "video has C=" + std::to_string(tensor.channels()) + ", model expects " +
                    std::to_string(params.config.input_dims));
  g_encoder_passes.fetch_add(1, std::memory_order_relaxed);

  ForwardTrace local;
  ForwardTrace& t = trace ? *trace : local;
  t = ForwardTrace{};
  t.params = &params;
  t.graph = build_region_graph(tensor.frames(), tensor.regions(), params.config.temporal_window);
  t.input = region_matrix(tensor);
  t.reduced = reduce_dims(params, t.input);

  std::vector<Matrix> outputs{t.reduced};
  t.affinity.resize(t.input.rows(), static_cast<Eigen::Index>(params.layers.size()));
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    t.layers.push_back(gat_layer_forward(params, k, t.graph, outputs.back()));
    t.affinity.col(static_cast<Eigen::Index>(k)) = t.layers.back().affinity;
    outputs.push_back(t.layers.back().output);
  }
  t.regions = depth_concat(t.input, outputs, params.config.concat);
  t.pool = attention_pool(params, t.regions, t.affinity, params.config.pooling);
  t.head = mlp_head(params, t.pool.pooled);
  return t.head.embedding.transpose();
}

std::uint64_t encoder_pass_count() { return g_encoder_passes.load(); }

void reset_encoder_pass_count() { g_encoder_passes.store(0); }

void write_beta_dump(const ForwardTrace& trace, std::ostream& out) {
  if (trace.pool.beta.size() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "beta weights exist only for attention pooling");
  }
  for (Eigen::Index i = 0; i < trace.pool.beta.size(); ++i) {
    out << i << '\t' << trace.graph.frame_of(static_cast<std::size_t>(i)) + 1 << '\t'
        << trace.pool.beta[i] << '\n';
  }
}

}  // namespace vrag
