#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "provenance/domain.hpp"

namespace provenance {

/// Numerically stable softmax: exp(x_i - max x) / sum_j exp(x_j - max x).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(
    const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  const Scalar peak = logits.maxCoeff();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> shifted = (logits.array() - peak).exp().matrix();
  return shifted / shifted.sum();
}

struct RelevanceScore {
  double raw = 0.0;
  std::optional<double> probability;
  std::size_t item_index = 0;
};

/// Cross-encoder relevance of a context item to a query. Implementations must
/// be safe to call concurrently and must return finite scores.
class RelevanceBackend {
 public:
  virtual ~RelevanceBackend() = default;

  virtual double score_pair(std::string_view query, std::string_view item) const = 0;

  /// Must agree element-wise with score_pair. The default calls it in a loop.
  virtual std::vector<double> score_batch(std::string_view query,
                                          const std::vector<std::string>& items) const;

  virtual std::string name() const = 0;
};

/// One score per context, in input order, probability unset.
std::vector<RelevanceScore> score_contexts(const RelevanceBackend& backend, std::string_view query,
                                           const std::vector<ContextItem>& contexts);

/// Softmax over the raw scores. The normalizing sum is accumulated in
/// ascending item_index order so the result does not depend on list order.
std::vector<RelevanceScore> normalize_scores(std::vector<RelevanceScore> scores);

}  // namespace provenance
