#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "provenance/domain.hpp"
#include "provenance/error.hpp"
#include "provenance/factcheck.hpp"

namespace provenance {

/// Bi-encoder: one row per input text, every row the same dimension.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual Eigen::MatrixXd embed(const std::vector<std::string>& texts) const = 0;
  virtual std::string name() const = 0;
};

struct BaselineConfig {
  Similarity similarity = Similarity::Cosine;
  bool temporal_ordering = true;
  double top_p = 0.9;
  Aggregation aggregation = Aggregation::Max;
  std::optional<double> threshold;

  void validate() const;
};

template <typename U, typename V>
typename U::Scalar dot_score(const Eigen::MatrixBase<U>& u, const Eigen::MatrixBase<V>& v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  }
  return u.reshaped().dot(v.reshaped());
}

template <typename U, typename V>
typename U::Scalar cosine_score(const Eigen::MatrixBase<U>& u, const Eigen::MatrixBase<V>& v) {
  using Scalar = typename U::Scalar;
  const Scalar dot = dot_score(u, v);
  const Scalar norms = u.norm() * v.norm();
  if (norms == Scalar(0)) throw Error(ErrorCode::ZeroVector, "cosine of a zero vector");
  return std::clamp(dot / norms, Scalar(-1), Scalar(1));
}

/// Similarity of every row of `rows` to `target`.
Eigen::VectorXd similarity_scores(const Eigen::MatrixXd& rows, const Eigen::VectorXd& target,
                                  Similarity similarity);

/// Bi-encoder baseline: sentence-split contexts, embedding similarity against
/// the formatted claim, softmax, TopP, optional temporal order, NLI per
/// selected sentence, aggregation.
FactualityReport baseline_check(const EmbeddingBackend& embedder, const NliBackend& nli,
                                const CheckInput& input, const BaselineConfig& config,
                                const SentenceSplitter& splitter = split_sentences);

}  // namespace provenance
