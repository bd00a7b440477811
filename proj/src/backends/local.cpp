#include "provenance/backends/local.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "provenance/digest.hpp"
#include "provenance/error.hpp"

namespace provenance {

using json = nlohmann::json;

namespace {

template <typename T>
T required(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorCode::ModelFormat, std::string("manifest: missing ") + key);
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::ModelFormat, std::string("manifest: wrong type for ") + key);
  }
}

template <typename T>
T optional_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? required<T>(j, key) : fallback;
}

std::vector<IoSpec> io_specs(const json& j, const char* key) {
  std::vector<IoSpec> out;
  if (!j.contains(key)) return out;
  if (!j[key].is_array()) throw Error(ErrorCode::ModelFormat, std::string("manifest: ") + key + " must be an array");
  for (const auto& entry : j[key]) {
    IoSpec spec;
    spec.name = required<std::string>(entry, "name");
    for (const auto& d : entry.value("shape", json::array())) {
      spec.shape.push_back(d.is_number_integer() ? d.get<std::int64_t>() : -1);
    }
    out.push_back(std::move(spec));
  }
  return out;
}

json io_json(const std::vector<IoSpec>& specs) {
  json out = json::array();
  for (const auto& s : specs) out.push_back({{"name", s.name}, {"shape", s.shape}});
  return out;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::string_view to_string(ScoreInterpretation interpretation) {
  return interpretation == ScoreInterpretation::RawLogit ? "raw-logit" : "probability";
}

ModelManifest ModelManifest::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ModelFormat, "manifest must be a JSON object");
  ModelManifest m;
  m.model_id = required<std::string>(j, "model_id");
  m.architecture = optional_or<std::string>(j, "architecture", "bert");
  if (m.architecture != "bert" && m.architecture != "roberta") {
    throw Error(ErrorCode::ModelFormat, "unsupported architecture " + m.architecture);
  }

  const auto task = optional_or<std::string>(j, "task", "cross-encoder");
  if (task == "cross-encoder") {
    m.task = Task::CrossEncoder;
  } else if (task == "embedding") {
    m.task = Task::Embedding;
  } else {
    throw Error(ErrorCode::ModelFormat, "unsupported task " + task);
  }

  for (const auto& f : required<json>(j, "files")) {
    m.files.push_back({required<std::string>(f, "path"), required<std::uint64_t>(f, "bytes"),
                       required<std::string>(f, "sha256")});
  }
  m.weights = optional_or<std::string>(j, "weights", m.weights);
  m.inputs = io_specs(j, "inputs");
  m.outputs = io_specs(j, "outputs");

  const auto interpretation = required<std::string>(j, "score_interpretation");
  if (interpretation == "raw-logit") {
    m.score_interpretation = ScoreInterpretation::RawLogit;
  } else if (interpretation == "probability") {
    m.score_interpretation = ScoreInterpretation::Probability;
  } else {
    throw Error(ErrorCode::ModelFormat, "score_interpretation must be raw-logit or probability");
  }

  if (j.contains("output")) {
    const auto& out = j["output"];
    m.output_index = optional_or<std::size_t>(out, "index", 0);
    const auto transform = optional_or<std::string>(out, "transform", "none");
    if (transform == "none") {
      m.output_transform = Transform::None;
    } else if (transform == "softmax") {
      m.output_transform = Transform::Softmax;
    } else if (transform == "sigmoid") {
      m.output_transform = Transform::Sigmoid;
    } else {
      throw Error(ErrorCode::ModelFormat, "unsupported output transform " + transform);
    }
  }
  if (m.output_transform != Transform::None && m.score_interpretation != ScoreInterpretation::Probability) {
    throw Error(ErrorCode::ModelFormat, "a softmax/sigmoid output must be declared as probability");
  }

  const auto tokenizer = required<json>(j, "tokenizer");
  m.tokenizer_type = optional_or<std::string>(tokenizer, "type", "wordpiece");
  if (m.tokenizer_type != "wordpiece") throw Error(ErrorCode::ModelFormat, "unsupported tokenizer " + m.tokenizer_type);
  m.vocab = required<std::string>(tokenizer, "vocab");
  m.lowercase = optional_or<bool>(tokenizer, "lowercase", true);

  m.max_sequence_length = required<std::size_t>(j, "max_sequence_length");

  const auto enc = required<json>(j, "encoder");
  m.encoder.hidden_size = required<Eigen::Index>(enc, "hidden_size");
  m.encoder.num_layers = required<Eigen::Index>(enc, "num_layers");
  m.encoder.num_heads = required<Eigen::Index>(enc, "num_heads");
  m.encoder.intermediate_size = required<Eigen::Index>(enc, "intermediate_size");
  m.encoder.vocab_size = required<Eigen::Index>(enc, "vocab_size");
  m.encoder.max_position_embeddings = required<Eigen::Index>(enc, "max_position_embeddings");
  m.encoder.type_vocab_size = optional_or<Eigen::Index>(enc, "type_vocab_size", 2);
  m.encoder.layer_norm_eps = optional_or<double>(enc, "layer_norm_eps", 1e-12);
  m.encoder.position_offset = optional_or<Eigen::Index>(enc, "position_offset", 0);

  m.tensor_prefix = optional_or<std::string>(j, "tensor_prefix", "");
  m.head = optional_or<std::string>(j, "head", "pooler");
  if (m.head != "pooler" && m.head != "dense") throw Error(ErrorCode::ModelFormat, "unsupported head " + m.head);

  const auto pooling = optional_or<std::string>(j, "pooling", "cls");
  if (pooling == "cls") {
    m.pooling = Pooling::Cls;
  } else if (pooling == "mean") {
    m.pooling = Pooling::Mean;
  } else {
    throw Error(ErrorCode::ModelFormat, "unsupported pooling " + pooling);
  }
  m.normalize = optional_or<bool>(j, "normalize", false);

  if (m.max_sequence_length < 5 ||
      static_cast<Eigen::Index>(m.max_sequence_length) + m.encoder.position_offset > m.encoder.max_position_embeddings) {
    throw Error(ErrorCode::ModelFormat, "max_sequence_length does not fit the position table");
  }
  const auto listed = [&](const std::string& path) {
    return std::any_of(m.files.begin(), m.files.end(), [&](const ManifestFile& f) { return f.path == path; });
  };
  if (!listed(m.weights)) throw Error(ErrorCode::ModelFormat, "weights file is not listed in files");
  if (!listed(m.vocab)) throw Error(ErrorCode::ModelFormat, "vocabulary file is not listed in files");
  return m;
}

ModelManifest ModelManifest::load(const std::filesystem::path& model_dir) {
  const auto path = model_dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ModelFormat, "cannot open " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ModelFormat, path.string() + ": " + e.what());
  }
}

json ModelManifest::to_json() const {
  json files_json = json::array();
  for (const auto& f : files) files_json.push_back({{"path", f.path}, {"bytes", f.bytes}, {"sha256", f.sha256}});
  static constexpr const char* kTransforms[] = {"none", "softmax", "sigmoid"};
  json j = {
      {"model_id", model_id},
      {"architecture", architecture},
      {"task", task == Task::CrossEncoder ? "cross-encoder" : "embedding"},
      {"files", files_json},
      {"weights", weights},
      {"inputs", io_json(inputs)},
      {"outputs", io_json(outputs)},
      {"score_interpretation", to_string(score_interpretation)},
      {"output", {{"index", output_index}, {"transform", kTransforms[static_cast<int>(output_transform)]}}},
      {"tokenizer", {{"type", tokenizer_type}, {"vocab", vocab}, {"lowercase", lowercase}}},
      {"max_sequence_length", max_sequence_length},
      {"encoder",
       {{"hidden_size", encoder.hidden_size},
        {"num_layers", encoder.num_layers},
        {"num_heads", encoder.num_heads},
        {"intermediate_size", encoder.intermediate_size},
        {"vocab_size", encoder.vocab_size},
        {"max_position_embeddings", encoder.max_position_embeddings},
        {"type_vocab_size", encoder.type_vocab_size},
        {"layer_norm_eps", encoder.layer_norm_eps},
        {"position_offset", encoder.position_offset}}},
      {"tensor_prefix", tensor_prefix},
      {"head", head},
      {"pooling", pooling == Pooling::Cls ? "cls" : "mean"},
      {"normalize", normalize},
  };
  return j;
}

void verify_model_files(const ModelManifest& manifest, const std::filesystem::path& model_dir) {
  for (const auto& f : manifest.files) {
    const auto path = model_dir / f.path;
    std::error_code ec;
    const auto size = std::filesystem::file_size(path, ec);
    if (ec) throw Error(ErrorCode::ChecksumMismatch, f.path + ": missing");
    if (size != f.bytes) {
      throw Error(ErrorCode::ChecksumMismatch,
                  f.path + ": size " + std::to_string(size) + " != " + std::to_string(f.bytes));
    }
    if (sha256_file(path) != f.sha256) throw Error(ErrorCode::ChecksumMismatch, f.path + ": sha256 differs");
  }
}

std::shared_ptr<const LocalModel> LocalModel::load(const std::filesystem::path& model_dir) {
  auto manifest = ModelManifest::load(model_dir);
  verify_model_files(manifest, model_dir);

  WordPieceTokenizer::Options options;
  options.lowercase = manifest.lowercase;
  auto tokenizer = WordPieceTokenizer::load(model_dir / manifest.vocab, options);
  if (static_cast<Eigen::Index>(tokenizer.vocab_size()) > manifest.encoder.vocab_size) {
    throw Error(ErrorCode::ModelFormat, "vocabulary is larger than the embedding table");
  }

  const auto tensors = read_tensor_file(model_dir / manifest.weights);
  auto encoder = transformer::encoder_from_tensors(tensors, manifest.encoder, manifest.tensor_prefix);

  std::optional<transformer::ClassifierHead<float>> head;
  if (manifest.task == ModelManifest::Task::CrossEncoder) {
    const auto h = manifest.encoder.hidden_size;
    const bool pooler = manifest.head == "pooler";
    transformer::ClassifierHead<float> built;
    built.dense = transformer::linear_from_tensors(
        tensors, pooler ? manifest.tensor_prefix + "pooler.dense" : "classifier.dense", h, h);
    built.out = transformer::linear_from_tensors(tensors, pooler ? "classifier" : "classifier.out_proj", -1, h);
    if (manifest.output_index >= static_cast<std::size_t>(built.out.weight.rows())) {
      throw Error(ErrorCode::ModelFormat, "output index exceeds the number of labels");
    }
    head = std::move(built);
  }
  return std::make_shared<const LocalModel>(std::move(manifest), std::move(tokenizer), std::move(encoder),
                                            std::move(head));
}

LocalModel::LocalModel(ModelManifest manifest, WordPieceTokenizer tokenizer, transformer::Encoder<float> encoder,
                       std::optional<transformer::ClassifierHead<float>> head)
    : manifest_(std::move(manifest)),
      tokenizer_(std::move(tokenizer)),
      encoder_(std::move(encoder)),
      head_(std::move(head)) {}

double LocalModel::score_pair(std::string_view first, std::string_view second) const {
  if (!head_) throw Error(ErrorCode::BackendFailure, manifest_.model_id + " is not a cross-encoder");
  auto enc = tokenizer_.encode_pair(first, second, manifest_.max_sequence_length);
  if (enc.truncated) {
    spdlog::warn("{}: pair truncated to {} tokens", manifest_.model_id, manifest_.max_sequence_length);
  }
  if (encoder_.config.type_vocab_size == 1) std::fill(enc.type_ids.begin(), enc.type_ids.end(), 0);

  const auto hidden = transformer::encode(encoder_, enc.ids, enc.type_ids);
  Eigen::VectorXf logits = transformer::classify(*head_, hidden);
  const auto i = static_cast<Eigen::Index>(manifest_.output_index);
  switch (manifest_.output_transform) {
    case ModelManifest::Transform::None:
      return logits[i];
    case ModelManifest::Transform::Sigmoid:
      return sigmoid(logits[i]);
    case ModelManifest::Transform::Softmax: {
      const Eigen::VectorXd shifted = (logits.cast<double>().array() - logits.cast<double>().maxCoeff()).exp();
      return shifted[i] / shifted.sum();
    }
  }
  return logits[i];
}

Eigen::VectorXd LocalModel::embed(std::string_view text) const {
  auto enc = tokenizer_.encode(text, manifest_.max_sequence_length);
  if (enc.truncated) {
    spdlog::warn("{}: text truncated to {} tokens", manifest_.model_id, manifest_.max_sequence_length);
  }
  const auto hidden = transformer::encode(encoder_, enc.ids, enc.type_ids);
  Eigen::VectorXd pooled = manifest_.pooling == ModelManifest::Pooling::Cls
                               ? Eigen::VectorXd(hidden.row(0).transpose().cast<double>())
                               : Eigen::VectorXd(hidden.colwise().mean().transpose().cast<double>());
  if (manifest_.normalize) {
    const double norm = pooled.norm();
    if (norm > 0.0) pooled /= norm;
  }
  return pooled;
}

LocalRelevanceBackend::LocalRelevanceBackend(std::shared_ptr<const LocalModel> model) : model_(std::move(model)) {
  if (model_->manifest().task != ModelManifest::Task::CrossEncoder) {
    throw Error(ErrorCode::ConfigError, "relevance backend needs a cross-encoder model");
  }
}

double LocalRelevanceBackend::score_pair(std::string_view query, std::string_view item) const {
  return model_->score_pair(query, item);
}

LocalNliBackend::LocalNliBackend(std::shared_ptr<const LocalModel> model) : model_(std::move(model)) {
  if (model_->manifest().task != ModelManifest::Task::CrossEncoder) {
    throw Error(ErrorCode::ConfigError, "NLI backend needs a cross-encoder model");
  }
}

double LocalNliBackend::entail(std::string_view source, std::string_view claim) const {
  const double score = model_->score_pair(source, claim);
  return model_->manifest().score_interpretation == ScoreInterpretation::RawLogit ? sigmoid(score) : score;
}

LocalEmbeddingBackend::LocalEmbeddingBackend(std::shared_ptr<const LocalModel> model) : model_(std::move(model)) {}

Eigen::MatrixXd LocalEmbeddingBackend::embed(const std::vector<std::string>& texts) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(texts.size()), model_->manifest().encoder.hidden_size);
  for (std::size_t i = 0; i < texts.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = model_->embed(texts[i]);
  return out;
}

}  // namespace provenance
