#include "provenance/baselines.hpp"

#include <algorithm>
#include <chrono>

#include "provenance/selection.hpp"

namespace provenance {

void BaselineConfig::validate() const {
  if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(ErrorCode::InvalidParameter, "top_p must lie in (0, 1]");
  if (threshold && !(*threshold >= 0.0 && *threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "threshold must lie in [0, 1]");
  }
}

Eigen::VectorXd similarity_scores(const Eigen::MatrixXd& rows, const Eigen::VectorXd& target,
                                  Similarity similarity) {
  Eigen::VectorXd out(rows.rows());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const auto row = rows.row(i).transpose();
    out[i] = similarity == Similarity::Dot ? dot_score(row, target) : cosine_score(row, target);
  }
  return out;
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

FactualityReport baseline_check(const EmbeddingBackend& embedder, const NliBackend& nli,
                                const CheckInput& input, const BaselineConfig& config,
                                const SentenceSplitter& splitter) {
  const auto started = Clock::now();
  run_stage("input", [&] {
    input.validate();
    config.validate();
    return 0;
  });

  PipelineConfig snapshot;
  snapshot.selection_strategy = SelectionStrategy::TopP;
  snapshot.top_p = config.top_p;
  snapshot.aggregation = config.aggregation;
  snapshot.threshold = config.threshold;
  snapshot.temporal_ordering = config.temporal_ordering;

  FactualityReport report;
  report.config_snapshot = snapshot;
  report.aggregation_method = config.aggregation;
  report.claim = run_stage("claim", [&] {
    return build_claim(input.query, input.answer, snapshot.claim_template);
  });

  // Sentences from all contexts, renumbered in reading order.
  std::vector<ContextItem> sentences;
  std::vector<ContextItem> ordered = input.contexts;
  std::sort(ordered.begin(), ordered.end(),
            [](const ContextItem& a, const ContextItem& b) { return a.index < b.index; });
  for (const auto& context : ordered) {
    for (auto& s : splitter(context.text)) sentences.push_back({std::move(s.text), sentences.size()});
  }
  if (sentences.empty()) throw Error(ErrorCode::EmptyInput, "no sentences in contexts", "split");
  report.baseline = BaselineSettings{config.similarity, sentences.size()};

  auto t = Clock::now();
  report.relevance = run_stage("relevance", [&] {
    std::vector<std::string> texts;
    texts.reserve(sentences.size() + 1);
    for (const auto& s : sentences) texts.push_back(s.text);
    texts.push_back(report.claim.text);

    Eigen::MatrixXd vectors;
    try {
      vectors = embedder.embed(texts);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::BackendFailure, embedder.name() + ": " + e.what());
    }
    if (vectors.rows() != static_cast<Eigen::Index>(texts.size()) || vectors.cols() < 1) {
      throw Error(ErrorCode::BackendFailure, embedder.name() + " returned a malformed embedding matrix");
    }
    if (!vectors.allFinite()) throw Error(ErrorCode::NonFiniteScore, "embedding components");

    const auto n = static_cast<Eigen::Index>(sentences.size());
    const Eigen::VectorXd target = vectors.row(n).transpose();
    const Eigen::VectorXd sims = similarity_scores(vectors.topRows(n), target, config.similarity);

    std::vector<RelevanceScore> scores;
    scores.reserve(sentences.size());
    for (Eigen::Index i = 0; i < n; ++i) scores.push_back({sims[i], std::nullopt, sentences[i].index});
    return normalize_scores(std::move(scores));
  });
  report.timing.relevance_ms = elapsed_ms(t);

  t = Clock::now();
  const auto selection = run_stage("selection", [&] {
    auto chosen = select_top_p(sentences, report.relevance, config.top_p);
    return config.temporal_ordering ? restore_temporal_order(std::move(chosen)) : chosen;
  });
  report.timing.selection_ms = elapsed_ms(t);

  t = Clock::now();
  const auto scored = run_stage("nli", [&] { return score_sources(nli, selection, report.claim); });
  report.timing.nli_ms = elapsed_ms(t);

  t = Clock::now();
  report.aggregate = run_stage("aggregate", [&] { return aggregate(scored, config.aggregation); });
  if (config.threshold) report.verdict = verdict(report.aggregate, *config.threshold);
  report.timing.aggregate_ms = elapsed_ms(t);

  for (std::size_t i = 0; i < selection.sources.size(); ++i) {
    const auto& s = selection.sources[i];
    report.per_source.push_back({s.item, s.weight, s.probability, scored[i].score});
  }
  report.timing.total_ms = elapsed_ms(started);
  return report;
}

}  // namespace provenance
