#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "provenance/backends/transformer.hpp"
#include "provenance/backends/wordpiece.hpp"
#include "provenance/baselines.hpp"
#include "provenance/factcheck.hpp"
#include "provenance/relevancy.hpp"

namespace provenance {

enum class ScoreInterpretation { RawLogit, Probability };

std::string_view to_string(ScoreInterpretation interpretation);

struct ManifestFile {
  std::string path;  // relative to the model directory
  std::uint64_t bytes = 0;
  std::string sha256;
};

/// Named graph input or output; -1 marks a dynamic dimension.
struct IoSpec {
  std::string name;
  std::vector<std::int64_t> shape;
};

/// Contents of `manifest.json` at the root of an exported model directory.
///
///     {
///       "model_id": "...", "architecture": "bert", "task": "cross-encoder" | "embedding",
///       "files": [{"path": "weights.pvtw", "bytes": N, "sha256": "..."}, {"path": "vocab.txt", ...}],
///       "weights": "weights.pvtw",
///       "inputs":  [{"name": "input_ids", "shape": [-1, -1]}, ...],
///       "outputs": [{"name": "logits", "shape": [-1, 1]}],
///       "score_interpretation": "raw-logit" | "probability",
///       "output": {"index": 0, "transform": "none" | "softmax" | "sigmoid"},
///       "tokenizer": {"type": "wordpiece", "vocab": "vocab.txt", "lowercase": true},
///       "max_sequence_length": 512,
///       "encoder": {"hidden_size": ..., "num_layers": ..., "num_heads": ..., "intermediate_size": ...,
///                   "vocab_size": ..., "max_position_embeddings": ..., "type_vocab_size": ...,
///                   "layer_norm_eps": 1e-12, "position_offset": 0},
///       "tensor_prefix": "bert.",
///       "head": "pooler" | "dense",          cross-encoder only
///       "pooling": "cls" | "mean", "normalize": false   embedding only
///     }
///
/// The "pooler" head reads `{prefix}pooler.dense` and `classifier`; the
/// "dense" head reads `classifier.dense` and `classifier.out_proj`.
struct ModelManifest {
  enum class Task { CrossEncoder, Embedding };
  enum class Transform { None, Softmax, Sigmoid };
  enum class Pooling { Cls, Mean };

  std::string model_id;
  std::string architecture = "bert";
  Task task = Task::CrossEncoder;
  std::vector<ManifestFile> files;
  std::string weights = "weights.pvtw";
  std::vector<IoSpec> inputs;
  std::vector<IoSpec> outputs;
  ScoreInterpretation score_interpretation = ScoreInterpretation::RawLogit;
  std::size_t output_index = 0;
  Transform output_transform = Transform::None;
  std::string tokenizer_type = "wordpiece";
  std::string vocab = "vocab.txt";
  bool lowercase = true;
  std::size_t max_sequence_length = 512;
  transformer::EncoderConfig encoder;
  std::string tensor_prefix;
  std::string head = "pooler";
  Pooling pooling = Pooling::Cls;
  bool normalize = false;

  static ModelManifest from_json(const nlohmann::json& j);
  static ModelManifest load(const std::filesystem::path& model_dir);
  nlohmann::json to_json() const;
};

/// Checks that every listed file exists with the recorded size and SHA-256.
/// Throws ChecksumMismatch naming the first offending file.
void verify_model_files(const ModelManifest& manifest, const std::filesystem::path& model_dir);

/// A loaded, immutable model; safe to share across threads.
class LocalModel {
 public:
  static std::shared_ptr<const LocalModel> load(const std::filesystem::path& model_dir);
  LocalModel(ModelManifest manifest, WordPieceTokenizer tokenizer, transformer::Encoder<float> encoder,
             std::optional<transformer::ClassifierHead<float>> head);

  /// Cross-encoder score for (first, second) after the manifest's output transform.
  double score_pair(std::string_view first, std::string_view second) const;
  /// Pooled sentence embedding.
  Eigen::VectorXd embed(std::string_view text) const;

  const ModelManifest& manifest() const { return manifest_; }
  const WordPieceTokenizer& tokenizer() const { return tokenizer_; }

 private:
  ModelManifest manifest_;
  WordPieceTokenizer tokenizer_;
  transformer::Encoder<float> encoder_;
  std::optional<transformer::ClassifierHead<float>> head_;
};

/// Relevance = model score on (query, item), used as the raw score.
class LocalRelevanceBackend final : public RelevanceBackend {
 public:
  explicit LocalRelevanceBackend(std::shared_ptr<const LocalModel> model);
  double score_pair(std::string_view query, std::string_view item) const override;
  std::string name() const override { return "local-relevance(" + model_->manifest().model_id + ")"; }

 private:
  std::shared_ptr<const LocalModel> model_;
};

/// Entailment = model score on (source, claim); raw logits go through a sigmoid.
class LocalNliBackend final : public NliBackend {
 public:
  explicit LocalNliBackend(std::shared_ptr<const LocalModel> model);
  double entail(std::string_view source, std::string_view claim) const override;
  std::string name() const override { return "local-nli(" + model_->manifest().model_id + ")"; }

 private:
  std::shared_ptr<const LocalModel> model_;
};

class LocalEmbeddingBackend final : public EmbeddingBackend {
 public:
  explicit LocalEmbeddingBackend(std::shared_ptr<const LocalModel> model);
  Eigen::MatrixXd embed(const std::vector<std::string>& texts) const override;
  std::string name() const override { return "local-embedding(" + model_->manifest().model_id + ")"; }

 private:
  std::shared_ptr<const LocalModel> model_;
};

}  // namespace provenance
