#include "provenance/backends/transformer.hpp"

#include "provenance/error.hpp"

namespace provenance::transformer {

namespace {

std::string shape_text(const std::vector<std::uint64_t>& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) out += (i ? "," : "") + std::to_string(shape[i]);
  return out + "]";
}

const Tensor& find(const TensorMap& tensors, const std::string& name, std::vector<Eigen::Index> expected) {
  const auto it = tensors.find(name);
  if (it == tensors.end()) throw Error(ErrorCode::ModelFormat, "missing tensor " + name);
  const auto& shape = it->second.shape;
  bool ok = shape.size() == expected.size();
  for (std::size_t i = 0; ok && i < shape.size(); ++i) {
    ok = expected[i] < 0 || shape[i] == static_cast<std::uint64_t>(expected[i]);
  }
  if (!ok) throw Error(ErrorCode::ModelFormat, "tensor " + name + " has shape " + shape_text(shape));
  return it->second;
}

RowMatrix<float> matrix(const TensorMap& tensors, const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  const auto& t = find(tensors, name, {rows, cols});
  return Eigen::Map<const RowMatrix<float>>(t.data.data(), static_cast<Eigen::Index>(t.shape[0]),
                                            static_cast<Eigen::Index>(t.shape[1]));
}

Vector<float> vector(const TensorMap& tensors, const std::string& name, Eigen::Index size) {
  const auto& t = find(tensors, name, {size});
  return Eigen::Map<const Vector<float>>(t.data.data(), static_cast<Eigen::Index>(t.shape[0]));
}

LayerNorm<float> layer_norm_from(const TensorMap& tensors, const std::string& name, Eigen::Index size) {
  return {vector(tensors, name + ".weight", size), vector(tensors, name + ".bias", size)};
}

}  // namespace

Linear<float> linear_from_tensors(const TensorMap& tensors, const std::string& name, Eigen::Index out,
                                  Eigen::Index in) {
  Linear<float> layer;
  layer.weight = matrix(tensors, name + ".weight", out, in);
  layer.bias = vector(tensors, name + ".bias", layer.weight.rows());
  return layer;
}

Encoder<float> encoder_from_tensors(const TensorMap& tensors, const EncoderConfig& config, const std::string& prefix) {
  const auto h = config.hidden_size;
  if (h <= 0 || config.num_heads <= 0 || h % config.num_heads != 0) {
    throw Error(ErrorCode::ModelFormat, "hidden_size must be a positive multiple of num_heads");
  }
  if (config.num_layers < 0 || config.intermediate_size <= 0 || config.vocab_size <= 0 ||
      config.type_vocab_size <= 0 || config.max_position_embeddings <= config.position_offset) {
    throw Error(ErrorCode::ModelFormat, "encoder dimensions must be positive");
  }

  Encoder<float> enc;
  enc.config = config;
  const auto emb = prefix + "embeddings.";
  enc.word_embeddings = matrix(tensors, emb + "word_embeddings.weight", config.vocab_size, h);
  enc.position_embeddings = matrix(tensors, emb + "position_embeddings.weight", config.max_position_embeddings, h);
  enc.token_type_embeddings = matrix(tensors, emb + "token_type_embeddings.weight", config.type_vocab_size, h);
  enc.embedding_norm = layer_norm_from(tensors, emb + "LayerNorm", h);

  for (Eigen::Index i = 0; i < config.num_layers; ++i) {
    const auto p = prefix + "encoder.layer." + std::to_string(i) + ".";
    EncoderLayer<float> layer;
    layer.query = linear_from_tensors(tensors, p + "attention.self.query", h, h);
    layer.key = linear_from_tensors(tensors, p + "attention.self.key", h, h);
    layer.value = linear_from_tensors(tensors, p + "attention.self.value", h, h);
    layer.attention_output = linear_from_tensors(tensors, p + "attention.output.dense", h, h);
    layer.attention_norm = layer_norm_from(tensors, p + "attention.output.LayerNorm", h);
    layer.intermediate = linear_from_tensors(tensors, p + "intermediate.dense", config.intermediate_size, h);
    layer.output = linear_from_tensors(tensors, p + "output.dense", h, config.intermediate_size);
    layer.output_norm = layer_norm_from(tensors, p + "output.LayerNorm", h);
    enc.layers.push_back(std::move(layer));
  }
  return enc;
}

}  // namespace provenance::transformer
