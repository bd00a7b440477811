#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "provenance/backends/stub.hpp"
#include "provenance/error.hpp"
#include "provenance/factcheck.hpp"
#include "provenance/json_io.hpp"

using namespace provenance;

namespace {

LookupTable table(std::initializer_list<std::pair<const std::string, double>> items) {
  LookupTable t;
  for (const auto& [k, v] : items) t.items.emplace(k, v);
  return t;
}

SourceSelection selection_of(std::vector<std::string> texts) {
  SourceSelection s;
  const double w = 1.0 / static_cast<double>(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) s.sources.push_back({{texts[i], i}, w, w});
  return s;
}

Error error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an Error");
  return Error(ErrorCode::ConfigError, "");
}

}  // namespace

TEST_CASE("score_sources with an answer-token stub") {
  const FunctionNliBackend stub([](std::string_view source, std::string_view) {
    return source.find("purr") != std::string_view::npos ? 1.0 : 0.0;
  });
  const auto claim = build_claim("What do cats do?", "purr");
  const auto scores = score_sources(stub, selection_of({"cats purr", "dogs bark"}), claim);
  REQUIRE(scores.size() == 2);
  CHECK(scores[0].score == 1.0);
  CHECK(scores[1].score == 0.0);
  CHECK(scores[0].weight == 0.5);
  CHECK(score_sources(stub, selection_of({"cats purr"}), claim).size() == 1);
}

TEST_CASE("score_sources enforces the backend contract") {
  const auto claim = build_claim("q", "a");
  const FunctionNliBackend too_high([](std::string_view, std::string_view) { return 1.3; });
  CHECK(error_of([&] { score_sources(too_high, selection_of({"s"}), claim); }).code() ==
        ErrorCode::OutOfRangeScore);
  const FunctionNliBackend nan([](std::string_view, std::string_view) {
    return std::numeric_limits<double>::quiet_NaN();
  });
  CHECK(error_of([&] { score_sources(nan, selection_of({"s"}), claim); }).code() == ErrorCode::NonFiniteScore);
  const FunctionNliBackend broken([](std::string_view, std::string_view) -> double {
    throw std::runtime_error("timeout");
  });
  CHECK(error_of([&] { score_sources(broken, selection_of({"s"}), claim); }).code() ==
        ErrorCode::BackendFailure);
  CHECK(error_of([&] { score_sources(broken, SourceSelection{}, claim); }).code() == ErrorCode::EmptyInput);
}

TEST_CASE("aggregate worked examples") {
  const std::vector<WeightedScore> even = {{0.5, 0.2}, {0.5, 0.9}};
  CHECK(aggregate(even, Aggregation::Min) == 0.2);
  CHECK(aggregate(even, Aggregation::Max) == 0.9);
  const std::vector<WeightedScore> skewed = {{0.75, 0.8}, {0.25, 0.4}};
  const double mean = aggregate(skewed, Aggregation::WeightedAverage);
  CHECK(round_sig9(mean) == 0.7);
  CHECK(std::abs(mean - 0.7) <= std::numeric_limits<double>::epsilon() * 0.7);
}

TEST_CASE("aggregate errors") {
  CHECK(error_of([] { aggregate({}, Aggregation::Max); }).code() == ErrorCode::EmptyInput);
  const std::vector<WeightedScore> bad = {{0.5, 0.2}, {0.4, 0.9}};
  CHECK(error_of([&] { aggregate(bad, Aggregation::Min); }).code() == ErrorCode::WeightSumMismatch);
}

TEST_CASE("aggregate ordering and single-source identity") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<WeightedScore> scores(1 + trial % 12);
    double total = 0.0;
    for (auto& s : scores) {
      s.weight = unit(rng) + 1e-3;
      s.score = unit(rng);
      total += s.weight;
    }
    for (auto& s : scores) s.weight /= total;
    const double lo = aggregate(scores, Aggregation::Min);
    const double mid = aggregate(scores, Aggregation::WeightedAverage);
    const double hi = aggregate(scores, Aggregation::Max);
    CHECK(lo <= mid);
    CHECK(mid <= hi);
  }
  const std::vector<WeightedScore> one = {{1.0, 0.37}};
  CHECK(aggregate(one, Aggregation::WeightedAverage) == 0.37);
}

TEST_CASE("verdict is inclusive") {
  CHECK(verdict(0.9, 0.5));
  CHECK(verdict(0.5, 0.5));
  CHECK_FALSE(verdict(0.49, 0.5));
}

TEST_CASE("check traces the pipeline with lookup stubs") {
  const LookupRelevanceBackend relevance(table({{"A", 1.0}, {"B", -1.0}}));
  const LookupNliBackend nli(table({{"A", 0.9}, {"B", 0.1}}));
  const auto input = CheckInput::from_sources("q", "a", {"A", "B"});
  for (auto method : {Aggregation::Min, Aggregation::Max, Aggregation::WeightedAverage}) {
    PipelineConfig config;
    config.selection_strategy = SelectionStrategy::TopK;
    config.top_k = 1;
    config.aggregation = method;
    const auto report = check(relevance, nli, input, config);
    REQUIRE(report.per_source.size() == 1);
    CHECK(report.per_source[0].item.text == "A");
    CHECK(report.per_source[0].weight == 1.0);
    CHECK(report.aggregate == 0.9);
    CHECK_FALSE(report.verdict.has_value());
    CHECK(report.relevance.size() == 2);
    CHECK(report.claim.text == "The answer to the question q is a.");
  }
}

TEST_CASE("check with one context and with a threshold") {
  const OverlapRelevanceBackend relevance;
  const LookupNliBackend nli(table({{"only", 0.42}}));
  PipelineConfig config;
  config.threshold = 0.4;
  const auto report = check(relevance, nli, CheckInput::from_sources("q", "a", {"only"}), config);
  REQUIRE(report.per_source.size() == 1);
  CHECK(report.per_source[0].weight == 1.0);
  CHECK(report.aggregate == 0.42);
  REQUIRE(report.verdict.has_value());
  CHECK(*report.verdict);
}

TEST_CASE("check names the failing stage") {
  const OverlapRelevanceBackend relevance;
  const OverlapNliBackend nli;
  auto e = error_of([&] { check(relevance, nli, CheckInput::from_sources("q", "a", {}), {}); });
  CHECK(e.code() == ErrorCode::EmptyInput);
  CHECK(e.stage() == "input");

  const FunctionNliBackend broken([](std::string_view, std::string_view) { return 2.0; });
  e = error_of([&] { check(relevance, broken, CheckInput::from_sources("q", "a", {"s"}), {}); });
  CHECK(e.code() == ErrorCode::OutOfRangeScore);
  CHECK(e.stage() == "nli");

  const LookupRelevanceBackend empty_table(LookupTable{});
  e = error_of([&] { check(empty_table, nli, CheckInput::from_sources("q", "a", {"s"}), {}); });
  CHECK(e.code() == ErrorCode::BackendFailure);
  CHECK(e.stage() == "relevance");
}

TEST_CASE("check is deterministic and ignores context list order") {
  const OverlapRelevanceBackend relevance;
  const OverlapNliBackend nli;
  auto input = CheckInput::from_sources(
      "Which river flows through Paris?", "The Seine river",
      {"The Seine flows through Paris.", "Berlin lies on the Spree.", "Paris is the capital of France.",
       "The Thames flows through London.", "Rivers in France include the Loire and the Seine river."});
  for (auto strategy : {SelectionStrategy::TopK, SelectionStrategy::TopP}) {
    for (auto method : {Aggregation::Min, Aggregation::Max, Aggregation::WeightedAverage}) {
      for (bool temporal : {false, true}) {
        PipelineConfig config;
        config.selection_strategy = strategy;
        config.top_k = 2;
        config.aggregation = method;
        config.temporal_ordering = temporal;
        const auto a = to_json(check(relevance, nli, input, config), false);
        const auto b = to_json(check(relevance, nli, input, config), false);
        CHECK(a == b);

        auto shuffled = input;
        std::reverse(shuffled.contexts.begin(), shuffled.contexts.end());
        std::swap(shuffled.contexts[0], shuffled.contexts[2]);
        const auto c = check(relevance, nli, shuffled, config);
        CHECK(c.aggregate == check(relevance, nli, input, config).aggregate);
      }
    }
  }
}
