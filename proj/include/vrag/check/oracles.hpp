// SPDX-License-Identifier: Apache-2.0
//
// Naive reference computations used as test oracles. They share no code with
// the production path: plain nested loops over std::vector, dense N x N
// matrices where the production code uses sparse neighbor lists or algebraic
// shortcuts.
#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vrag/model.hpp"

namespace vrag::check {

using DenseMatrix = std::vector<std::vector<double>>;

DenseMatrix to_dense(const Matrix& m);

// All (i, j) with |frame(i) - frame(j)| <= window, enumerated pairwise.
std::set<std::pair<std::size_t, std::size_t>> brute_force_adjacency(std::size_t frames,
                                                                    std::size_t regions,
                                                                    std::size_t window = 1);

DenseMatrix reference_reduce(const ModelParams& params, const DenseMatrix& input);

struct ReferenceLayer {
  DenseMatrix query, key;
  DenseMatrix attention;  // full N x N, zero outside the neighborhood
  DenseMatrix output;
  std::vector<double> affinity;  // row means of the full A B^T
};

// Builds the full score matrix, masks non-neighbors with -inf and applies a
// row softmax; attention aggregation only.
ReferenceLayer reference_gat_layer(const ModelParams& params, std::size_t layer, std::size_t frames,
                                   std::size_t regions, const DenseMatrix& input);

struct ReferencePool {
  std::vector<double> beta;
  std::vector<double> pooled;
};

// Affinities from explicit N x N products A(k) B(k)^T, one pair per layer.
ReferencePool reference_attention_pool(const ModelParams& params, const DenseMatrix& regions,
                                       const std::vector<DenseMatrix>& queries,
                                       const std::vector<DenseMatrix>& keys);

std::vector<double> reference_mlp(const ModelParams& params, const std::vector<double>& pooled);

// Full attention-mode forward pass composed from the reference pieces.
std::vector<double> reference_embed(const ModelParams& params, const RegionFeatureTensor& tensor);

double reference_cosine(const std::vector<double>& u, const std::vector<double>& v);
double reference_chamfer(const DenseMatrix& s);
double reference_symmetric_chamfer(const DenseMatrix& s);

// Quadratic-time AP: precision at each hit recounted from scratch.
double reference_average_precision(const std::vector<std::string>& ranked,
                                   const std::set<std::string>& relevant);

}  // namespace vrag::check
