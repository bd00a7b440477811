#include "provenance/selection.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "provenance/error.hpp"

namespace provenance {

namespace {

struct Ranked {
  std::size_t position;  // into `scored`
  double probability;
  std::size_t item_index;
};

std::vector<Ranked> rank(const std::vector<RelevanceScore>& scored) {
  if (scored.empty()) throw Error(ErrorCode::EmptyInput, "no scored contexts to select from");
  std::vector<Ranked> ranked;
  ranked.reserve(scored.size());
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (!scored[i].probability) {
      throw Error(ErrorCode::InvalidParameter, "scores must be normalized before selection");
    }
    ranked.push_back({i, *scored[i].probability, scored[i].item_index});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    return a.item_index < b.item_index;
  });
  return ranked;
}

SourceSelection renormalize(const std::vector<ContextItem>& contexts,
                            const std::vector<Ranked>& ranked, std::size_t keep,
                            SelectionStrategy strategy, double parameter) {
  std::unordered_map<std::size_t, const ContextItem*> by_index;
  by_index.reserve(contexts.size());
  for (const auto& c : contexts) by_index.emplace(c.index, &c);

  double total = 0.0;
  for (std::size_t i = 0; i < keep; ++i) total += ranked[i].probability;

  SourceSelection selection{{}, strategy, parameter};
  selection.sources.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    const auto it = by_index.find(ranked[i].item_index);
    if (it == by_index.end()) {
      throw Error(ErrorCode::ValidationError,
                  "score refers to unknown context item " + std::to_string(ranked[i].item_index));
    }
    selection.sources.push_back({*it->second, ranked[i].probability / total, ranked[i].probability});
  }
  return selection;
}

}  // namespace

SourceSelection select_top_k(const std::vector<ContextItem>& contexts,
                             const std::vector<RelevanceScore>& scored, std::size_t k) {
  if (k < 1) throw Error(ErrorCode::InvalidParameter, "top_k must be >= 1");
  const auto ranked = rank(scored);
  return renormalize(contexts, ranked, std::min(k, ranked.size()), SelectionStrategy::TopK,
                     static_cast<double>(k));
}

SourceSelection select_top_p(const std::vector<ContextItem>& contexts,
                             const std::vector<RelevanceScore>& scored, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidParameter, "top_p must lie in (0, 1]");
  const auto ranked = rank(scored);
  std::size_t keep = 0;
  double cumulative = 0.0;
  while (keep < ranked.size()) {
    cumulative += ranked[keep].probability;
    ++keep;
    if (cumulative + kCumulativeSlack >= p) break;
  }
  return renormalize(contexts, ranked, keep, SelectionStrategy::TopP, p);
}

SourceSelection restore_temporal_order(SourceSelection selection) {
  std::stable_sort(selection.sources.begin(), selection.sources.end(),
                   [](const Source& a, const Source& b) { return a.item.index < b.item.index; });
  return selection;
}

SourceSelection select_sources(const std::vector<ContextItem>& contexts,
                               const std::vector<RelevanceScore>& scored,
                               const PipelineConfig& config) {
  auto selection = config.selection_strategy == SelectionStrategy::TopK
                       ? select_top_k(contexts, scored, config.top_k)
                       : select_top_p(contexts, scored, config.top_p);
  if (config.temporal_ordering) selection = restore_temporal_order(std::move(selection));
  return selection;
}

}  // namespace provenance
