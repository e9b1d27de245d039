// SPDX-License-Identifier: Apache-2.0
//
// Region attention graph network: dimension reduction, K graph-attention
// layers over the spatio-temporal region graph, depth-wise concatenation,
// affinity-driven attention pooling and a two-layer head producing a fixed
// size video embedding.
//
// Row-vector convention throughout: a region matrix is N x width, a linear
// layer computes X * W + b with W stored fan_in x fan_out.
#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "vrag/features.hpp"
#include "vrag/graph.hpp"

namespace vrag {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;
using Embedding = Eigen::VectorXd;

enum class RegionAggregation : std::uint8_t { kAttention = 0, kMax = 1, kAverage = 2 };
enum class Pooling : std::uint8_t { kAttention = 0, kMax = 1, kAverage = 2 };

// Which region representations are concatenated before pooling.
enum class ConcatMode : std::uint8_t {
  kAllLayers = 0,             // X, X(0), ..., X(K)
  kFinalGraphAttention = 1,   // X(K)
  kAllGraphAttention = 2,     // X(1), ..., X(K)
  kAllGraphAttentionAndReduced = 3,  // X(0), ..., X(K)
};

struct ModelConfig {
  std::size_t input_dims = 3840;      // C
  std::size_t hidden_dims = 512;      // C'
  std::size_t layers = 3;             // K
  std::size_t embedding_dims = 4096;  // D
  bool tied_attention = false;        // key transform shares the query weights
  RegionAggregation region_aggregation = RegionAggregation::kAttention;
  Pooling pooling = Pooling::kAttention;
  ConcatMode concat = ConcatMode::kAllLayers;
  std::size_t temporal_window = kDefaultTemporalWindow;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void validate(const ModelConfig& config);

// Row width of the concatenated region matrix; C + (K+1)C' for kAllLayers.
std::size_t concat_width(const ModelConfig& config);

struct GraphLayerParams {
  Matrix query_weight;  // C' x C'
  RowVector query_bias;
  Matrix key_weight;    // C' x C'
  RowVector key_bias;
  Matrix output_weight;  // C' x C'
  RowVector output_bias;
};

struct ModelParams {
  ModelConfig config;
  Matrix reduce_weight;  // C x C'
  RowVector reduce_bias;
  std::vector<GraphLayerParams> layers;
  RowVector attention_weight;  // K
  RowVector attention_bias;    // 1
  Matrix hidden_weight;        // concat_width x D
  RowVector hidden_bias;
  Matrix output_weight;        // D x D
  RowVector output_bias;
};

// Gradients mirror the parameter layout exactly.
using GradientSet = ModelParams;

// Visits every learnable tensor in canonical order (the serialization order).
template <typename Params, typename Fn>
void for_each_tensor(Params& params, Fn&& fn) {
  auto visit = [&](std::string_view name, auto& t) {
    using Scalar = std::remove_reference_t<decltype(*t.data())>;
    fn(name, std::span<Scalar>(t.data(), static_cast<std::size_t>(t.size())));
  };
  visit("reduce_weight", params.reduce_weight);
  visit("reduce_bias", params.reduce_bias);
  for (auto& layer : params.layers) {
    visit("query_weight", layer.query_weight);
    visit("query_bias", layer.query_bias);
    visit("key_weight", layer.key_weight);
    visit("key_bias", layer.key_bias);
    visit("output_weight", layer.output_weight);
    visit("output_bias", layer.output_bias);
  }
  visit("attention_weight", params.attention_weight);
  visit("attention_bias", params.attention_bias);
  visit("hidden_weight", params.hidden_weight);
  visit("hidden_bias", params.hidden_bias);
  visit("output_weight", params.output_weight);
  visit("output_bias", params.output_bias);
}

std::size_t parameter_count(const ModelParams& params);

// All tensors zero, shaped for `config`.
ModelParams zeros_like(const ModelConfig& config);

// Weights ~ U(-s, s), s = sqrt(6 / (fan_in + fan_out)); biases zero.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

// Throws kShapeMismatch or kNonFinite.
void validate(const ModelParams& params);

bool bitwise_equal(const ModelParams& a, const ModelParams& b);

// N x C matrix of a tensor, node i = frame i / R, region i % R.
Matrix region_matrix(const RegionFeatureTensor& tensor);

double elu(double x);

// X(0) = ELU(X W_r + b_r).
Matrix reduce_dims(const ModelParams& params, const Matrix& input);

struct GraphLayerOutput {
  Matrix query;   // A, N x C'
  Matrix key;     // B, N x C' (equals query when attention is tied)
  RowVector mean_key;  // column means of B
  // Attention weight per graph edge, indexed like RegionGraph's CSR arrays.
  std::vector<double> weights;
  Matrix message;  // aggregated neighbor features before the output transform
  Matrix output;   // X(k)
  // Row means of the dense affinity matrix A B^T, one per node.
  Eigen::VectorXd affinity;
  // Max aggregation only: per (node, channel) the winning neighbor node.
  std::vector<std::size_t> argmax;
};

// `layer` is 0-based (layer k of K is index k-1). Throws kShapeMismatch and,
// for non-finite attention scores, kNonFinite.
GraphLayerOutput gat_layer_forward(const ModelParams& params, std::size_t layer,
                                   const RegionGraph& graph, const Matrix& input);

// `layer_outputs` holds X(0), ..., X(K).
Matrix depth_concat(const Matrix& input, std::span<const Matrix> layer_outputs, ConcatMode mode);

struct PoolingOutput {
  Eigen::VectorXd logits;  // unnormalized attention, attention pooling only
  Eigen::VectorXd beta;    // softmax(logits), attention pooling only
  RowVector pooled;
  std::vector<Eigen::Index> argmax;  // max pooling only: winning row per column
};

// `affinity` is N x K (column k = mean affinities of layer k).
PoolingOutput attention_pool(const ModelParams& params, const Matrix& regions,
                             const Matrix& affinity, Pooling mode);

struct HeadOutput {
  RowVector hidden;  // ELU(r W_1 + b_1)
  RowVector embedding;
};

HeadOutput mlp_head(const ModelParams& params, const RowVector& pooled);

struct ForwardTrace {
  const ModelParams* params = nullptr;
  RegionGraph graph;
  Matrix input;
  Matrix reduced;
  std::vector<GraphLayerOutput> layers;
  Matrix regions;   // depth concatenation
  Matrix affinity;  // N x K
  PoolingOutput pool;
  HeadOutput head;
};

// Runs the full network on one video. When `trace` is non-null it receives
// every intermediate needed for backward().
Embedding embed_video(const ModelParams& params, const RegionFeatureTensor& tensor,
                      ForwardTrace* trace = nullptr);

// Number of embed_video calls since the last reset (process-wide).
std::uint64_t encoder_pass_count();
void reset_encoder_pass_count();

// `node_id<TAB>frame<TAB>beta` per node, frames 1-based.
void write_beta_dump(const ForwardTrace& trace, std::ostream& out);

// Versioned little-endian parameter file, see params_io.cpp for the layout.
// When `optimizer` is non-empty it is stored as an extension section.
struct AdamState;
void save_params(const ModelParams& params, const std::filesystem::path& path,
                 const AdamState* optimizer = nullptr);
ModelParams load_params(const std::filesystem::path& path, AdamState* optimizer = nullptr);
std::vector<std::uint8_t> encode_params(const ModelParams& params, const AdamState* optimizer = nullptr);
ModelParams decode_params(std::span<const std::uint8_t> bytes, AdamState* optimizer = nullptr);

}  // namespace vrag
