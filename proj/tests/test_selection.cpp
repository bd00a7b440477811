#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "provenance/error.hpp"
#include "provenance/selection.hpp"

using namespace provenance;

namespace {

struct Fixture {
  std::vector<ContextItem> contexts;
  std::vector<RelevanceScore> scored;
};

Fixture with_probabilities(const std::vector<double>& probs) {
  Fixture f;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    f.contexts.push_back({"item " + std::to_string(i), i});
    f.scored.push_back({0.0, probs[i], i});
  }
  return f;
}

std::vector<std::size_t> indices(const SourceSelection& s) {
  std::vector<std::size_t> out;
  for (const auto& src : s.sources) out.push_back(src.item.index);
  return out;
}

double weight_sum(const SourceSelection& s) {
  double total = 0.0;
  for (const auto& src : s.sources) total += src.weight;
  return total;
}

}  // namespace

TEST_CASE("select_top_k worked examples") {
  auto f = with_probabilities({0.5, 0.3, 0.2});
  auto s = select_top_k(f.contexts, f.scored, 2);
  CHECK(indices(s) == std::vector<std::size_t>{0, 1});
  CHECK(std::abs(s.sources[0].weight - 0.625) < 1e-12);
  CHECK(std::abs(s.sources[1].weight - 0.375) < 1e-12);
  CHECK(s.strategy == SelectionStrategy::TopK);

  s = select_top_k(f.contexts, f.scored, 7);
  REQUIRE(s.sources.size() == 3);
  for (const auto& src : s.sources) CHECK(std::abs(src.weight - src.probability) < 1e-12);

  s = select_top_k(f.contexts, f.scored, 1);
  CHECK(indices(s) == std::vector<std::size_t>{0});
  CHECK(s.sources[0].weight == 1.0);
  CHECK(s.sources[0].item.text == "item 0");
}

TEST_CASE("select_top_p worked examples") {
  auto f = with_probabilities({0.6, 0.3, 0.1});
  auto s = select_top_p(f.contexts, f.scored, 0.9);
  CHECK(indices(s) == std::vector<std::size_t>{0, 1});
  CHECK(std::abs(s.sources[0].weight - 2.0 / 3.0) < 1e-12);
  CHECK(std::abs(s.sources[1].weight - 1.0 / 3.0) < 1e-12);

  f = with_probabilities({0.5, 0.3, 0.2});
  s = select_top_p(f.contexts, f.scored, 0.9);
  CHECK(indices(s) == std::vector<std::size_t>{0, 1, 2});
  for (const auto& src : s.sources) CHECK(std::abs(src.weight - src.probability) < 1e-12);

  f = with_probabilities({0.25, 0.25, 0.25, 0.25});
  CHECK(select_top_p(f.contexts, f.scored, 1.0).sources.size() == 4);
  CHECK(select_top_p(f.contexts, f.scored, 0.5).sources.size() == 2);
}

TEST_CASE("selection errors") {
  auto f = with_probabilities({1.0});
  CHECK_THROWS_AS(select_top_p(f.contexts, f.scored, 0.0), Error);
  CHECK_THROWS_AS(select_top_p(f.contexts, f.scored, 1.5), Error);
  CHECK_THROWS_AS(select_top_k(f.contexts, f.scored, 0), Error);
  try {
    select_top_p({}, {}, 0.9);
    FAIL("expected EmptyInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyInput);
  }
  f.scored[0].probability.reset();
  CHECK_THROWS_AS(select_top_k(f.contexts, f.scored, 1), Error);
}

TEST_CASE("ties rank by ascending index") {
  auto f = with_probabilities({0.2, 0.4, 0.4});
  CHECK(indices(select_top_k(f.contexts, f.scored, 1)) == std::vector<std::size_t>{1});
  CHECK(indices(select_top_k(f.contexts, f.scored, 2)) == std::vector<std::size_t>{1, 2});
}

TEST_CASE("restore_temporal_order") {
  SourceSelection s;
  s.sources = {{{"seven", 7}, 0.5, 0.5}, {{"two", 2}, 0.3, 0.3}, {{"five", 5}, 0.2, 0.2}};
  const auto ordered = restore_temporal_order(s);
  CHECK(indices(ordered) == std::vector<std::size_t>{2, 5, 7});
  CHECK(ordered.sources[0].weight == 0.3);
  CHECK(ordered.sources[2].weight == 0.5);
  CHECK(indices(restore_temporal_order(ordered)) == indices(ordered));

  SourceSelection single;
  single.sources = {{{"x", 4}, 1.0, 1.0}};
  CHECK(indices(restore_temporal_order(single)) == std::vector<std::size_t>{4});
}

TEST_CASE("TopP is minimal against brute force and preserves ratios") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> p_draw(0.05, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + trial % 10;
    const auto probs = oracle::random_distribution(rng, n);
    const double p = p_draw(rng);
    const auto f = with_probabilities(probs);
    const auto s = select_top_p(f.contexts, f.scored, p);
    const auto expected = oracle::brute_force_nucleus(probs, p, kCumulativeSlack);

    auto got = indices(s);
    std::sort(got.begin(), got.end());
    CHECK(got == expected.members);
    CHECK(std::abs(weight_sum(s) - 1.0) < 1e-9);

    double mass = 0.0;
    double lowest = 1.0;
    for (const auto& src : s.sources) {
      mass += src.probability;
      lowest = std::min(lowest, src.probability);
      CHECK(src.weight > 0.0);
      CHECK(src.weight <= 1.0);
    }
    if (s.sources.size() > 1) CHECK(mass - lowest + kCumulativeSlack < p);
    for (const auto& a : s.sources) {
      for (const auto& b : s.sources) {
        CHECK(std::abs(a.weight / b.weight - a.probability / b.probability) < 1e-12);
      }
    }
  }
}

TEST_CASE("select_sources honours the configured strategy and ordering") {
  auto f = with_probabilities({0.1, 0.2, 0.3, 0.4});
  PipelineConfig config;
  config.selection_strategy = SelectionStrategy::TopK;
  config.top_k = 3;
  config.temporal_ordering = false;
  CHECK(indices(select_sources(f.contexts, f.scored, config)) == std::vector<std::size_t>{3, 2, 1});
  config.temporal_ordering = true;
  CHECK(indices(select_sources(f.contexts, f.scored, config)) == std::vector<std::size_t>{1, 2, 3});
  config.selection_strategy = SelectionStrategy::TopP;
  config.top_p = 0.7;
  CHECK(indices(select_sources(f.contexts, f.scored, config)) == std::vector<std::size_t>{2, 3});
}
