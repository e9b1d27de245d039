// SPDX-License-Identifier: Apache-2.0
#include "vrag/training.hpp"

#include "vrag/error.hpp"

namespace vrag {
namespace {

// d c(u, v) / du; zero when either vector has (near) zero norm.
Embedding cosine_grad(const Embedding& u, const Embedding& v) {
  const double nu = u.norm(), nv = v.norm();
  if (nu < kZeroNorm || nv < kZeroNorm) return Embedding::Zero(u.size());
  const double c = u.dot(v) / (nu * nv);
  return v / (nu * nv) - c * u / (nu * nu);
}

// ELU derivative recovered from its output: 1 for y > 0, else e^z = y + 1.
Matrix elu_grad(const Matrix& y) {
  return y.unaryExpr([](double v) { return v > 0 ? 1.0 : v + 1.0; });
}

RowVector elu_grad(const RowVector& y) {
  return y.unaryExpr([](double v) { return v > 0 ? 1.0 : v + 1.0; });
}

}  // namespace

double triplet_loss(const Embedding& anchor, const Embedding& positive, const Embedding& negative,
                    double margin) {
  const double value =
      cosine_similarity(anchor, negative) - cosine_similarity(anchor, positive) + margin;
  return value > 0 ? value : 0.0;
}

TripletLossGrad triplet_loss_grad(const Embedding& anchor, const Embedding& positive,
                                  const Embedding& negative, double margin) {
  TripletLossGrad out;
  out.loss = triplet_loss(anchor, positive, negative, margin);
  out.anchor = Embedding::Zero(anchor.size());
  out.positive = Embedding::Zero(positive.size());
  out.negative = Embedding::Zero(negative.size());
  if (out.loss > 0) {
    out.anchor = cosine_grad(anchor, negative) - cosine_grad(anchor, positive);
    out.positive = -cosine_grad(positive, anchor);
    out.negative = cosine_grad(negative, anchor);
  }
  return out;
}

void accumulate_gradients(const ForwardTrace& t, const RowVector& dv, GradientSet& g) {
  const ModelParams& p = *t.params;
  const auto& config = p.config;
  const Eigen::Index n = t.input.rows();
  const auto num_layers = p.layers.size();

  // Head: v = ELU(r W1 + b1) W2 + b2.
  g.output_weight += t.head.hidden.transpose() * dv;
  g.output_bias += dv;
  RowVector dh = (dv * p.output_weight.transpose()).cwiseProduct(elu_grad(t.head.hidden));
  g.hidden_weight += t.pool.pooled.transpose() * dh;
  g.hidden_bias += dh;
  const RowVector dpooled = dh * p.hidden_weight.transpose();

  Matrix dregions = Matrix::Zero(n, t.regions.cols());
  Matrix daffinity = Matrix::Zero(n, static_cast<Eigen::Index>(num_layers));
  switch (config.pooling) {
    case Pooling::kAttention: {
      const auto& beta = t.pool.beta;
      dregions = beta * dpooled;
      const Eigen::VectorXd dbeta = t.regions * dpooled.transpose();
      const Eigen::VectorXd dlogit = beta.cwiseProduct(dbeta.array().matrix() -
                                                       Eigen::VectorXd::Constant(n, beta.dot(dbeta)));
      g.attention_weight += dlogit.transpose() * t.affinity;
      g.attention_bias[0] += dlogit.sum();
      daffinity = dlogit * p.attention_weight;
      break;
    }
    case Pooling::kAverage:
      dregions.rowwise() = dpooled / static_cast<double>(n);
      break;
    case Pooling::kMax:
      for (Eigen::Index c = 0; c < dpooled.size(); ++c) {
        dregions(t.pool.argmax[static_cast<std::size_t>(c)], c) += dpooled[c];
      }
      break;
  }

  // Route concatenated columns back to X(0..K); the raw input X has no parameters.
  const Eigen::Index width = static_cast<Eigen::Index>(config.hidden_dims);
  std::vector<Matrix> doutputs(num_layers + 1, Matrix::Zero(n, width));
  Eigen::Index col = 0;
  auto take = [&](std::size_t k) {
    doutputs[k] += dregions.middleCols(col, width);
    col += width;
  };
  switch (config.concat) {
    case ConcatMode::kAllLayers:
      col = static_cast<Eigen::Index>(config.input_dims);
      for (std::size_t k = 0; k <= num_layers; ++k) take(k);
      break;
    case ConcatMode::kFinalGraphAttention:
      take(num_layers);
      break;
    case ConcatMode::kAllGraphAttention:
      for (std::size_t k = 1; k <= num_layers; ++k) take(k);
      break;
    case ConcatMode::kAllGraphAttentionAndReduced:
      for (std::size_t k = 0; k <= num_layers; ++k) take(k);
      break;
  }

  for (std::size_t k = num_layers; k-- > 0;) {
    const auto& layer = t.layers[k];
    const auto& lp = p.layers[k];
    auto& lg = g.layers[k];
    const Matrix& input = k == 0 ? t.reduced : t.layers[k - 1].output;

    const Matrix dz = doutputs[k + 1].cwiseProduct(elu_grad(layer.output));
    lg.output_weight += layer.message.transpose() * dz;
    lg.output_bias += dz.colwise().sum();
    const Matrix dmessage = dz * lp.output_weight.transpose();

    Matrix dinput = Matrix::Zero(n, width);
    Matrix dquery = Matrix::Zero(n, width);
    Matrix dkey = Matrix::Zero(n, width);
    switch (config.region_aggregation) {
      case RegionAggregation::kAttention: {
        std::vector<double> dw;
        for (Eigen::Index i = 0; i < n; ++i) {
          const auto node = static_cast<std::size_t>(i);
          auto nbrs = t.graph.neighbors(node);
          const double* w = layer.weights.data() + t.graph.edge_offset(node);
          dw.assign(nbrs.size(), 0.0);
          double weighted = 0;
          for (std::size_t e = 0; e < nbrs.size(); ++e) {
            const auto j = static_cast<Eigen::Index>(nbrs[e]);
            dinput.row(j) += w[e] * dmessage.row(i);
            dw[e] = dmessage.row(i).dot(input.row(j));
            weighted += w[e] * dw[e];
          }
          for (std::size_t e = 0; e < nbrs.size(); ++e) {
            const auto j = static_cast<Eigen::Index>(nbrs[e]);
            const double ds = w[e] * (dw[e] - weighted);
            dquery.row(i) += ds * layer.key.row(j);
            dkey.row(j) += ds * layer.query.row(i);
          }
        }
        break;
      }
      case RegionAggregation::kAverage:
        for (Eigen::Index i = 0; i < n; ++i) {
          auto nbrs = t.graph.neighbors(static_cast<std::size_t>(i));
          const double inv = 1.0 / static_cast<double>(nbrs.size());
          for (auto j : nbrs) dinput.row(static_cast<Eigen::Index>(j)) += inv * dmessage.row(i);
        }
        break;
      case RegionAggregation::kMax:
        for (Eigen::Index i = 0; i < n; ++i) {
          for (Eigen::Index c = 0; c < width; ++c) {
            const auto j = layer.argmax[static_cast<std::size_t>(i * width + c)];
            dinput(static_cast<Eigen::Index>(j), c) += dmessage(i, c);
          }
        }
        break;
    }

    // Affinity path: affinity_i = a_i . mean_j(b_j).
    const Eigen::VectorXd dalpha = daffinity.col(static_cast<Eigen::Index>(k));
    dquery += dalpha * layer.mean_key;
    const RowVector dmean_key = dalpha.transpose() * layer.query;
    dkey.rowwise() += dmean_key / static_cast<double>(n);

    if (config.tied_attention) dquery += dkey;
    lg.query_weight += input.transpose() * dquery;
    lg.query_bias += dquery.colwise().sum();
    dinput += dquery * lp.query_weight.transpose();
    if (!config.tied_attention) {
      lg.key_weight += input.transpose() * dkey;
      lg.key_bias += dkey.colwise().sum();
      dinput += dkey * lp.key_weight.transpose();
    }
    doutputs[k] += dinput;
  }

  const Matrix dz0 = doutputs[0].cwiseProduct(elu_grad(t.reduced));
  g.reduce_weight += t.input.transpose() * dz0;
  g.reduce_bias += dz0.colwise().sum();
}

GradientSet backward(const ModelParams& params, const ForwardTrace& anchor,
                     const ForwardTrace& positive, const ForwardTrace& negative, double margin) {
  for (const auto* t : {&anchor, &positive, &negative}) {
    if (t->params != &params) {
      throw Error(ErrorCode::kInvalidArgument, "forward trace was produced by different parameters");
    }
  }
  GradientSet grads = zeros_like(params.config);
  const auto lg = triplet_loss_grad(anchor.head.embedding.transpose(),
                                    positive.head.embedding.transpose(),
                                    negative.head.embedding.transpose(), margin);
  if (lg.loss <= 0) return grads;
  accumulate_gradients(anchor, lg.anchor.transpose(), grads);
  accumulate_gradients(positive, lg.positive.transpose(), grads);
  accumulate_gradients(negative, lg.negative.transpose(), grads);
  return grads;
}

}  // namespace vrag
