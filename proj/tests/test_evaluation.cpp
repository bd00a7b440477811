#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "provenance/backends/stub.hpp"
#include "provenance/error.hpp"
#include "provenance/evaluation.hpp"
#include "provenance/json_io.hpp"

using namespace provenance;

namespace {

Error error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an Error");
  return Error(ErrorCode::ConfigError, "");
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("provenance-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("parse_dataset reads triplets") {
  const auto records = parse_dataset(
      R"({"id":"r1","query":"q","answer":"a","sources":["s1","s2"],"label":1,"extra":true})"
      "\n\n"
      R"({"id":7,"query":" q2 ","answer":"a2","sources":["A. B."],"label":0})",
      false);
  REQUIRE(records.size() == 2);
  CHECK(records[0].id == "r1");
  CHECK(records[0].sources.size() == 2);
  CHECK(records[0].label == 1);
  CHECK(records[1].id == "7");
  CHECK(records[1].query == "q2");
  CHECK(records[1].sources == std::vector<std::string>{"A. B."});
}

TEST_CASE("parse_dataset expands sentences") {
  const auto records = parse_dataset(
      R"({"id":"r","query":"q","answer":"a","sources":["A. B.","C"],"label":1})", true);
  CHECK(records[0].sources == std::vector<std::string>{"A.", "B.", "C"});
}

TEST_CASE("parse_dataset reports the field or line at fault") {
  auto e = error_of([] { parse_dataset(R"({"id":"r","query":"q","answer":"a","sources":["s"]})", false); });
  CHECK(e.code() == ErrorCode::ValidationError);
  CHECK(e.detail().rfind("label", 0) == 0);

  e = error_of([] { parse_dataset(R"({"id":"r","query":"q","answer":"a","sources":[],"label":1})", false); });
  CHECK(e.code() == ErrorCode::ValidationError);
  CHECK(e.detail().rfind("sources", 0) == 0);

  e = error_of([] { parse_dataset(R"({"id":"r","query":"q","answer":"a","sources":["s"],"label":2})", false); });
  CHECK(e.detail().rfind("label", 0) == 0);

  e = error_of([] {
    parse_dataset(R"({"id":"r","query":"q","answer":"a","sources":["s"],"label":1})"
                  "\n{not json}\n",
                  false);
  });
  CHECK(e.code() == ErrorCode::ParseError);
  CHECK(e.detail().find("line 2") != std::string::npos);

  e = error_of([] { load_dataset("/nonexistent/file.jsonl", false); });
  CHECK(e.code() == ErrorCode::ParseError);
}

TEST_CASE("auc worked examples") {
  CHECK(auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}) == 0.75);
  CHECK(auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}) == 1.0);
  CHECK(auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, std::vector<int>{0, 1, 0, 1}) == 0.5);
  CHECK(error_of([] { auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}); }).code() ==
        ErrorCode::SingleClass);
  CHECK(error_of([] { auc(std::vector<double>{0.1}, std::vector<int>{1, 0}); }).code() ==
        ErrorCode::LengthMismatch);
}

TEST_CASE("auc matches pair counting, flips and monotone transforms") {
  std::mt19937_64 rng(23);
  std::vector<double> scores;
  std::vector<int> labels;
  for (int trial = 0; trial < 100; ++trial) {
    oracle::random_labeled_scores(rng, 2 + trial, scores, labels);
    const double fast = auc(scores, labels);
    CHECK(std::abs(fast - oracle::pair_count_auc(scores, labels)) < 1e-9);

    auto flipped = labels;
    for (auto& l : flipped) l = 1 - l;
    CHECK(std::abs(fast + auc(scores, flipped) - 1.0) < 1e-9);

    auto transformed = scores;
    for (auto& s : transformed) s = std::exp(3.0 * s) - 2.0;
    CHECK(std::abs(auc(transformed, labels) - fast) < 1e-12);

    CHECK(std::abs(roc_curve(scores, labels).area() - fast) < 1e-9);
  }
}

TEST_CASE("roc_curve points") {
  auto curve = roc_curve(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0});
  REQUIRE(curve.points.size() == 3);
  CHECK(curve.points[0].false_positive_rate == 0.0);
  CHECK(curve.points[0].true_positive_rate == 0.0);
  CHECK(std::isinf(curve.points[0].threshold));
  CHECK(curve.points[1].false_positive_rate == 0.0);
  CHECK(curve.points[1].true_positive_rate == 1.0);
  CHECK(curve.points[1].threshold == 0.9);
  CHECK(curve.points[2].false_positive_rate == 1.0);
  CHECK(curve.points[2].true_positive_rate == 1.0);

  curve = roc_curve(std::vector<double>{0.3, 0.3, 0.3}, std::vector<int>{1, 0, 1});
  REQUIRE(curve.points.size() == 2);
  CHECK(curve.points[1].false_positive_rate == 1.0);
  CHECK(curve.points[1].true_positive_rate == 1.0);

  CHECK(error_of([] { roc_curve(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}); }).code() ==
        ErrorCode::SingleClass);
}

TEST_CASE("roc_curve is monotone") {
  std::mt19937_64 rng(29);
  std::vector<double> scores;
  std::vector<int> labels;
  oracle::random_labeled_scores(rng, 150, scores, labels);
  const auto curve = roc_curve(scores, labels);
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    CHECK(curve.points[i].false_positive_rate >= curve.points[i - 1].false_positive_rate);
    CHECK(curve.points[i].true_positive_rate >= curve.points[i - 1].true_positive_rate);
    CHECK(curve.points[i].threshold < curve.points[i - 1].threshold);
  }
  CHECK(curve.points.back().false_positive_rate == 1.0);
  CHECK(curve.points.back().true_positive_rate == 1.0);
}

TEST_CASE("accuracy_at") {
  CHECK(accuracy_at(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}, 0.5) == 1.0);
  CHECK(accuracy_at(std::vector<double>{0.9, 0.1}, std::vector<int>{0, 1}, 0.5) == 0.0);
  CHECK(accuracy_at(std::vector<double>{0.6, 0.6}, std::vector<int>{1, 0}, 0.5) == 0.5);
  CHECK(accuracy_at(std::vector<double>{0.6, 0.7}, std::vector<int>{1, 1}, 0.5) == 1.0);
  CHECK(error_of([] { accuracy_at(std::vector<double>{0.6}, std::vector<int>{1, 0}, 0.5); }).code() ==
        ErrorCode::LengthMismatch);
}

TEST_CASE("tune_threshold") {
  CHECK(tune_threshold(std::vector<double>{0.1, 0.9}, std::vector<int>{0, 1}) == 0.5);
  CHECK(tune_threshold(std::vector<double>{0.2, 0.4, 0.6, 0.8}, std::vector<int>{0, 0, 1, 1}) == 0.5);

  const std::vector<double> inverted_scores{0.1, 0.9};
  const std::vector<int> inverted_labels{1, 0};
  const double t = tune_threshold(inverted_scores, inverted_labels);
  CHECK((t < 0.1 || t > 0.9));
  CHECK(accuracy_at(inverted_scores, inverted_labels, t) == 0.5);
  CHECK(error_of([] { tune_threshold(std::vector<double>{0.1}, std::vector<int>{1}); }).code() ==
        ErrorCode::SingleClass);
}

TEST_CASE("tune_threshold maximizes accuracy against brute force") {
  std::mt19937_64 rng(31);
  std::vector<double> scores;
  std::vector<int> labels;
  for (int trial = 0; trial < 60; ++trial) {
    oracle::random_labeled_scores(rng, 3 + trial, scores, labels);
    auto distinct = scores;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<double> candidates{std::nextafter(distinct.front(), -1.0)};
    for (std::size_t i = 1; i < distinct.size(); ++i) candidates.push_back((distinct[i - 1] + distinct[i]) / 2);
    candidates.push_back(std::nextafter(distinct.back(), 2.0));
    double best = 0.0;
    for (double c : candidates) best = std::max(best, accuracy_at(scores, labels, c));

    const double tuned = tune_threshold(scores, labels);
    CHECK(accuracy_at(scores, labels, tuned) == best);
    for (double c : candidates) {
      if (c < tuned) CHECK(accuracy_at(scores, labels, c) < best);
    }
  }
}

TEST_CASE("evaluate collects scores, metrics and exclusions") {
  const OverlapRelevanceBackend relevance;
  const OverlapNliBackend nli;
  PipelineConfig config;
  config.threshold = 0.5;
  const auto pipeline = [&](const CheckInput& input) { return check(relevance, nli, input, config); };

  const std::vector<EvalRecord> dataset = {
      {"f1", "Which river flows through Paris?", "Seine", {"The Seine flows through Paris."}, 1},
      {"h1", "Which river flows through Paris?", "Danube", {"The Seine flows through Paris."}, 0},
      {"f2", "Who wrote Hamlet?", "William Shakespeare", {"Hamlet was written by William Shakespeare."}, 1},
      {"h2", "Who wrote Hamlet?", "Charles Dickens", {"Hamlet was written by William Shakespeare."}, 0},
  };
  const auto report = evaluate(pipeline, dataset, config, {"tiny", 2});
  CHECK(report.n_records == 4);
  REQUIRE(report.per_record.size() == 4);
  CHECK(report.per_record[0].id == "f1");
  // Claim tokens {river, flows, through, paris, seine}; the source has four of them.
  CHECK(report.per_record[0].score == 0.8);
  CHECK(report.per_record[1].score == 0.6);
  // {wrote, hamlet, william, shakespeare} vs {wrote, hamlet, charles, dickens}; "written" != "wrote".
  CHECK(report.per_record[2].score == 0.75);
  CHECK(report.per_record[3].score == 0.25);
  CHECK(*report.auc == oracle::pair_count_auc({0.8, 0.6, 0.75, 0.25}, {1, 0, 1, 0}));
  CHECK(*report.auc == 1.0);
  CHECK(*report.accuracy_at_threshold == 0.75);

  auto shuffled = dataset;
  std::reverse(shuffled.begin(), shuffled.end());
  CHECK(*evaluate(pipeline, shuffled, config).auc == *report.auc);

  const auto single = evaluate(pipeline, {dataset[0]}, config);
  CHECK(single.n_records == 1);
  CHECK_FALSE(single.auc.has_value());
  CHECK(single.auc_note == "SingleClass");

  CHECK(error_of([&] { evaluate(pipeline, {}, config); }).code() == ErrorCode::EmptyInput);
}

TEST_CASE("evaluate excludes failing records and fails when all do") {
  const OverlapNliBackend nli;
  const FunctionRelevanceBackend picky([](std::string_view, std::string_view item) -> double {
    if (item.find("boom") != std::string_view::npos) throw std::runtime_error("backend down");
    return 0.0;
  });
  PipelineConfig config;
  const auto pipeline = [&](const CheckInput& input) { return check(picky, nli, input, config); };
  const std::vector<EvalRecord> dataset = {
      {"ok1", "q one", "alpha", {"alpha beta"}, 1},
      {"bad", "q two", "gamma", {"boom"}, 0},
      {"ok2", "q three", "delta", {"epsilon"}, 0},
  };
  const auto report = evaluate(pipeline, dataset, config);
  CHECK(report.n_records == 2);
  REQUIRE(report.excluded.size() == 1);
  CHECK(report.excluded[0].id == "bad");
  CHECK(report.excluded[0].error.find("BackendFailure") != std::string::npos);
  CHECK(*report.auc == 1.0);

  CHECK(error_of([&] { evaluate(pipeline, {dataset[1]}, config); }).code() == ErrorCode::AllRecordsFailed);
}

TEST_CASE("ROC csv and run persistence") {
  const auto dir = temp_dir("persist");
  const auto curve = roc_curve(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0});
  write_roc_csv(curve, dir / "roc.csv");
  std::ifstream in(dir / "roc.csv");
  std::string header, first, second;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  CHECK(header == "fpr,tpr,threshold");
  CHECK(first == "0,0,inf");
  CHECK(second == "0,1,0.9");

  const std::vector<EvalRecord> dataset = {{"r", "q", "a", {"s"}, 1}};
  PipelineConfig config;
  EvalReport report;
  report.config_snapshot = config;
  report.n_records = 1;
  report.per_record = {{"r", 0.5, 1}};
  const auto run = persist_run(report, dataset, dir);
  CHECK(run.filename() == run_key(dataset, config));
  CHECK(run_key(dataset, config).size() == 64);
  CHECK(std::filesystem::exists(run / "report.json"));
  CHECK(std::filesystem::exists(run / "config.json"));

  config.top_p = 0.8;
  CHECK(run_key(dataset, config) != run.filename().string());
  auto changed = dataset;
  changed[0].label = 0;
  CHECK(run_key(changed, report.config_snapshot) != run.filename().string());
}
