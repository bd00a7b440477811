#include "provenance/relevancy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "provenance/error.hpp"

namespace provenance {

std::vector<double> RelevanceBackend::score_batch(std::string_view query,
                                                  const std::vector<std::string>& items) const {
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(score_pair(query, item));
  return out;
}

namespace {

[[noreturn]] void locate_failure(const RelevanceBackend& backend, std::string_view query,
                                 const std::vector<std::string>& texts,
                                 const std::vector<ContextItem>& contexts,
                                 const std::string& batch_message) {
  for (std::size_t i = 0; i < texts.size(); ++i) {
    try {
      (void)backend.score_pair(query, texts[i]);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::BackendFailure, backend.name() + " failed on context item " +
                                                 std::to_string(contexts[i].index) + ": " +
                                                 e.what());
    }
  }
  throw Error(ErrorCode::BackendFailure, backend.name() + " batch failed: " + batch_message);
}

}  // namespace

std::vector<RelevanceScore> score_contexts(const RelevanceBackend& backend, std::string_view query,
                                           const std::vector<ContextItem>& contexts) {
  if (contexts.empty()) throw Error(ErrorCode::EmptyInput, "no context items to score");

  std::vector<std::string> texts;
  texts.reserve(contexts.size());
  for (const auto& c : contexts) texts.push_back(c.text);

  std::vector<double> raws;
  try {
    raws = backend.score_batch(query, texts);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BackendFailure) throw;
    locate_failure(backend, query, texts, contexts, e.detail());
  } catch (const std::exception& e) {
    locate_failure(backend, query, texts, contexts, e.what());
  }
  if (raws.size() != contexts.size()) {
    throw Error(ErrorCode::BackendFailure,
                backend.name() + " returned " + std::to_string(raws.size()) + " scores for " +
                    std::to_string(contexts.size()) + " items");
  }

  std::vector<RelevanceScore> scores;
  scores.reserve(raws.size());
  for (std::size_t i = 0; i < raws.size(); ++i) {
    if (!std::isfinite(raws[i])) {
      throw Error(ErrorCode::NonFiniteScore,
                  "relevance score for context item " + std::to_string(contexts[i].index));
    }
    scores.push_back({raws[i], std::nullopt, contexts[i].index});
  }
  return scores;
}

std::vector<RelevanceScore> normalize_scores(std::vector<RelevanceScore> scores) {
  if (scores.empty()) throw Error(ErrorCode::EmptyInput, "no scores to normalize");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a].item_index < scores[b].item_index;
  });

  Eigen::VectorXd raws(static_cast<Eigen::Index>(scores.size()));
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double raw = scores[order[k]].raw;
    if (!std::isfinite(raw)) {
      throw Error(ErrorCode::NonFiniteScore,
                  "relevance score for context item " + std::to_string(scores[order[k]].item_index));
    }
    raws[static_cast<Eigen::Index>(k)] = raw;
  }

  const Eigen::VectorXd probs = softmax(raws);
  for (std::size_t k = 0; k < order.size(); ++k) {
    scores[order[k]].probability = probs[static_cast<Eigen::Index>(k)];
  }
  return scores;
}

}  // namespace provenance
