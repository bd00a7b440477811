#pragma once

#include <cstddef>
#include <vector>

#include "provenance/domain.hpp"
#include "provenance/relevancy.hpp"

namespace provenance {

/// Slack applied when comparing a cumulative probability against top_p, so
/// that 0.6 + 0.3 counts as reaching 0.9 despite binary rounding.
inline constexpr double kCumulativeSlack = 1e-12;

struct Source {
  ContextItem item;
  double weight = 0.0;
  double probability = 0.0;
};

struct SourceSelection {
  std::vector<Source> sources;
  SelectionStrategy strategy = SelectionStrategy::TopP;
  double parameter = 0.0;
};

/// Keeps the min(k, n) most probable items; weights are their probabilities
/// divided by the kept total. Equal probabilities rank by ascending index.
SourceSelection select_top_k(const std::vector<ContextItem>& contexts,
                             const std::vector<RelevanceScore>& scored, std::size_t k);

/// Keeps the shortest decreasing-probability prefix whose cumulative
/// probability reaches p, then renormalizes as select_top_k does.
SourceSelection select_top_p(const std::vector<ContextItem>& contexts,
                             const std::vector<RelevanceScore>& scored, double p);

/// Sorts sources by original index; weights move with their items.
SourceSelection restore_temporal_order(SourceSelection selection);

/// Strategy dispatch plus optional temporal reordering, driven by `config`.
SourceSelection select_sources(const std::vector<ContextItem>& contexts,
                               const std::vector<RelevanceScore>& scored,
                               const PipelineConfig& config);

}  // namespace provenance
