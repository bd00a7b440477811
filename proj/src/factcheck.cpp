#include "provenance/factcheck.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>

#include "provenance/error.hpp"

namespace provenance {

std::vector<double> NliBackend::entail_batch(const std::vector<std::string>& sources,
                                             std::string_view claim) const {
  std::vector<double> out;
  out.reserve(sources.size());
  for (const auto& s : sources) out.push_back(entail(s, claim));
  return out;
}

std::vector<WeightedScore> score_sources(const NliBackend& backend, const SourceSelection& selection,
                                         const ClaimPrompt& claim) {
  if (selection.sources.empty()) throw Error(ErrorCode::EmptyInput, "no sources selected");

  std::vector<std::string> texts;
  texts.reserve(selection.sources.size());
  for (const auto& s : selection.sources) texts.push_back(s.item.text);

  std::vector<double> scores;
  try {
    scores = backend.entail_batch(texts, claim.text);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BackendFailure) throw;
    throw Error(ErrorCode::BackendFailure, backend.name() + ": " + e.detail());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::BackendFailure, backend.name() + ": " + e.what());
  }
  if (scores.size() != texts.size()) {
    throw Error(ErrorCode::BackendFailure,
                backend.name() + " returned " + std::to_string(scores.size()) + " scores for " +
                    std::to_string(texts.size()) + " sources");
  }

  std::vector<WeightedScore> out;
  out.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& item = selection.sources[i].item;
    if (!std::isfinite(scores[i])) {
      throw Error(ErrorCode::NonFiniteScore, "entailment score for source " + std::to_string(item.index));
    }
    if (scores[i] < 0.0 || scores[i] > 1.0) {
      throw Error(ErrorCode::OutOfRangeScore, "entailment score " + std::to_string(scores[i]) +
                                                  " for source " + std::to_string(item.index));
    }
    out.push_back({selection.sources[i].weight, scores[i]});
  }
  return out;
}

double aggregate(std::span<const WeightedScore> scores, Aggregation method) {
  if (scores.empty()) throw Error(ErrorCode::EmptyInput, "nothing to aggregate");

  const auto n = static_cast<Eigen::Index>(scores.size());
  Eigen::VectorXd weights(n);
  Eigen::VectorXd values(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    weights[i] = scores[static_cast<std::size_t>(i)].weight;
    values[i] = scores[static_cast<std::size_t>(i)].score;
  }
  const double total = weights.sum();
  if (std::abs(total - 1.0) > 1e-6) {
    throw Error(ErrorCode::WeightSumMismatch, "weights sum to " + std::to_string(total));
  }

  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();
  switch (method) {
    case Aggregation::Min: return lo;
    case Aggregation::Max: return hi;
    case Aggregation::WeightedAverage: {
      // Weights off unity by rounding could push the mean past the extremes.
      double mean = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) mean += weights[i] * values[i];
      return std::clamp(mean, lo, hi);
    }
  }
  return hi;
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

template <typename F>
auto run_stage(const char* stage, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    throw e.with_stage(stage);
  }
}

}  // namespace

FactualityReport check(const RelevanceBackend& relevance, const NliBackend& nli,
                       const CheckInput& input, const PipelineConfig& config) {
  const auto started = Clock::now();
  run_stage("input", [&] {
    input.validate();
    config.validate();
    return 0;
  });

  FactualityReport report;
  report.config_snapshot = config;
  report.aggregation_method = config.aggregation;

  auto t = Clock::now();
  report.relevance = run_stage("relevance", [&] {
    return normalize_scores(score_contexts(relevance, input.query, input.contexts));
  });
  report.timing.relevance_ms = elapsed_ms(t);

  t = Clock::now();
  const auto selection = run_stage("selection", [&] {
    return select_sources(input.contexts, report.relevance, config);
  });
  report.timing.selection_ms = elapsed_ms(t);

  report.claim = run_stage("claim", [&] {
    return build_claim(input.query, input.answer, config.claim_template);
  });

  t = Clock::now();
  const auto scored = run_stage("nli", [&] { return score_sources(nli, selection, report.claim); });
  report.timing.nli_ms = elapsed_ms(t);

  t = Clock::now();
  report.aggregate = run_stage("aggregate", [&] { return aggregate(scored, config.aggregation); });
  if (config.threshold) report.verdict = verdict(report.aggregate, *config.threshold);
  report.timing.aggregate_ms = elapsed_ms(t);

  report.per_source.reserve(selection.sources.size());
  for (std::size_t i = 0; i < selection.sources.size(); ++i) {
    const auto& s = selection.sources[i];
    report.per_source.push_back({s.item, s.weight, s.probability, scored[i].score});
  }
  report.timing.total_ms = elapsed_ms(started);
  return report;
}

}  // namespace provenance
