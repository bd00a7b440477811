#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "provenance/domain.hpp"
#include "provenance/relevancy.hpp"
#include "provenance/selection.hpp"

namespace provenance {

/// NLI scorer: probability-like support of `claim` by `source`, in [0, 1].
/// Backends wrapping logit models squash internally. Implementations must be
/// safe to call concurrently.
class NliBackend {
 public:
  virtual ~NliBackend() = default;

  virtual double entail(std::string_view source, std::string_view claim) const = 0;

  /// Must agree element-wise with entail. The default calls it in a loop.
  virtual std::vector<double> entail_batch(const std::vector<std::string>& sources,
                                           std::string_view claim) const;

  virtual std::string name() const = 0;
};

struct WeightedScore {
  double weight = 0.0;
  double score = 0.0;
};

struct SourceScore {
  ContextItem item;
  double weight = 0.0;
  double probability = 0.0;
  double score = 0.0;
};

/// Wall-clock duration of each pipeline stage in milliseconds.
struct StageTimings {
  double relevance_ms = 0.0;
  double selection_ms = 0.0;
  double nli_ms = 0.0;
  double aggregate_ms = 0.0;
  double total_ms = 0.0;
};

/// Baseline-only settings carried by a report produced by baseline_check.
struct BaselineSettings {
  Similarity similarity = Similarity::Cosine;
  std::size_t sentence_count = 0;

  friend bool operator==(const BaselineSettings&, const BaselineSettings&) = default;
};

struct FactualityReport {
  ClaimPrompt claim;
  /// Relevance of every context item, in the order the pipeline scored them.
  std::vector<RelevanceScore> relevance;
  /// Selected sources in the order they were checked.
  std::vector<SourceScore> per_source;
  double aggregate = 0.0;
  Aggregation aggregation_method = Aggregation::Max;
  std::optional<bool> verdict;
  PipelineConfig config_snapshot;
  std::optional<BaselineSettings> baseline;
  StageTimings timing;
};

/// One (weight, score) per source, in selection order.
std::vector<WeightedScore> score_sources(const NliBackend& backend, const SourceSelection& selection,
                                         const ClaimPrompt& claim);

/// Min and Max ignore the weights; WeightedAverage is sum(w_i * s_i). The
/// weights must sum to 1 within 1e-6.
double aggregate(std::span<const WeightedScore> scores, Aggregation method);

/// Inclusive: a score equal to the threshold is factual.
constexpr bool verdict(double score, double threshold) { return score >= threshold; }

/// Full pipeline: relevance, softmax, selection, optional temporal reordering,
/// claim construction, NLI scoring, aggregation and optional verdict. Errors
/// carry the name of the stage that raised them.
FactualityReport check(const RelevanceBackend& relevance, const NliBackend& nli,
                       const CheckInput& input, const PipelineConfig& config);

}  // namespace provenance
