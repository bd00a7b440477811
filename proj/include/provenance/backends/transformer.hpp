#pragma once

// Encoder-only transformer (BERT layout: post-norm residual blocks, erf GELU)
// as free functions over Eigen row-major matrices, one row per token.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "provenance/backends/tensor_file.hpp"

namespace provenance::transformer {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct EncoderConfig {
  Eigen::Index hidden_size = 0;
  Eigen::Index num_layers = 0;
  Eigen::Index num_heads = 0;
  Eigen::Index intermediate_size = 0;
  Eigen::Index vocab_size = 0;
  Eigen::Index max_position_embeddings = 0;
  Eigen::Index type_vocab_size = 0;
  double layer_norm_eps = 1e-12;
  /// Added to every position id; RoBERTa checkpoints use padding id + 1.
  Eigen::Index position_offset = 0;
};

/// y = x W^T + b with W stored (out, in).
template <typename Scalar>
struct Linear {
  RowMatrix<Scalar> weight;
  Vector<Scalar> bias;
};

template <typename Scalar>
struct LayerNorm {
  Vector<Scalar> gamma;
  Vector<Scalar> beta;
};

template <typename Scalar>
struct EncoderLayer {
  Linear<Scalar> query, key, value, attention_output;
  LayerNorm<Scalar> attention_norm;
  Linear<Scalar> intermediate, output;
  LayerNorm<Scalar> output_norm;
};

template <typename Scalar>
struct Encoder {
  EncoderConfig config;
  RowMatrix<Scalar> word_embeddings;
  RowMatrix<Scalar> position_embeddings;
  RowMatrix<Scalar> token_type_embeddings;
  LayerNorm<Scalar> embedding_norm;
  std::vector<EncoderLayer<Scalar>> layers;
};

/// tanh(dense(h_cls)) followed by a linear projection to the label logits.
template <typename Scalar>
struct ClassifierHead {
  Linear<Scalar> dense;
  Linear<Scalar> out;
};

template <typename Scalar>
RowMatrix<Scalar> apply(const Linear<Scalar>& layer, const RowMatrix<Scalar>& x) {
  RowMatrix<Scalar> y = x * layer.weight.transpose();
  y.rowwise() += layer.bias.transpose();
  return y;
}

template <typename Scalar>
void layer_norm(RowMatrix<Scalar>& x, const LayerNorm<Scalar>& norm, Scalar eps) {
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    const Scalar mean = row.mean();
    row.array() -= mean;
    const Scalar variance = row.squaredNorm() / static_cast<Scalar>(row.size());
    row *= Scalar(1) / std::sqrt(variance + eps);
    row = row.cwiseProduct(norm.gamma.transpose()) + norm.beta.transpose();
  }
}

template <typename Scalar>
Scalar gelu(Scalar x) {
  return Scalar(0.5) * x * (Scalar(1) + std::erf(x / std::sqrt(Scalar(2))));
}

template <typename Scalar>
RowMatrix<Scalar> self_attention(const EncoderLayer<Scalar>& layer, const RowMatrix<Scalar>& x, Eigen::Index heads) {
  const RowMatrix<Scalar> q = apply(layer.query, x);
  const RowMatrix<Scalar> k = apply(layer.key, x);
  const RowMatrix<Scalar> v = apply(layer.value, x);
  const Eigen::Index width = x.cols() / heads;
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(width));

  RowMatrix<Scalar> context(x.rows(), x.cols());
  for (Eigen::Index h = 0; h < heads; ++h) {
    const auto cols = Eigen::seqN(h * width, width);
    RowMatrix<Scalar> scores = (q(Eigen::all, cols) * k(Eigen::all, cols).transpose()) * scale;
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
      auto row = scores.row(r);
      row = (row.array() - row.maxCoeff()).exp();
      row /= row.sum();
    }
    context(Eigen::all, cols) = scores * v(Eigen::all, cols);
  }
  return apply(layer.attention_output, context);
}

/// Final hidden states, one row per input token.
template <typename Scalar>
RowMatrix<Scalar> encode(const Encoder<Scalar>& encoder, const std::vector<std::int32_t>& ids,
                         const std::vector<std::int32_t>& type_ids) {
  const auto& cfg = encoder.config;
  const auto n = static_cast<Eigen::Index>(ids.size());
  const auto eps = static_cast<Scalar>(cfg.layer_norm_eps);

  RowMatrix<Scalar> x(n, cfg.hidden_size);
  for (Eigen::Index t = 0; t < n; ++t) {
    x.row(t) = encoder.word_embeddings.row(ids[static_cast<std::size_t>(t)]) +
               encoder.position_embeddings.row(t + cfg.position_offset) +
               encoder.token_type_embeddings.row(type_ids[static_cast<std::size_t>(t)]);
  }
  layer_norm(x, encoder.embedding_norm, eps);

  for (const auto& layer : encoder.layers) {
    x += self_attention(layer, x, cfg.num_heads);
    layer_norm(x, layer.attention_norm, eps);
    RowMatrix<Scalar> hidden = apply(layer.intermediate, x).unaryExpr([](Scalar v) { return gelu(v); });
    x += apply(layer.output, hidden);
    layer_norm(x, layer.output_norm, eps);
  }
  return x;
}

template <typename Scalar>
Vector<Scalar> classify(const ClassifierHead<Scalar>& head, const RowMatrix<Scalar>& hidden) {
  RowMatrix<Scalar> cls = hidden.topRows(1);
  RowMatrix<Scalar> pooled = apply(head.dense, cls).array().tanh();
  return apply(head.out, pooled).row(0).transpose();
}

/// Builds an encoder from HF-style tensor names under `prefix`
/// ("embeddings.word_embeddings.weight", "encoder.layer.0.attention.self.query.weight", ...).
Encoder<float> encoder_from_tensors(const TensorMap& tensors, const EncoderConfig& config, const std::string& prefix);
Linear<float> linear_from_tensors(const TensorMap& tensors, const std::string& name, Eigen::Index out,
                                  Eigen::Index in);

}  // namespace provenance::transformer
