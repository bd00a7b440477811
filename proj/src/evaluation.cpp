#include "provenance/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "provenance/digest.hpp"
#include "provenance/error.hpp"
#include "provenance/json_io.hpp"

namespace provenance {

namespace {

struct ClassCounts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

ClassCounts check_scored(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(scores.size()) + " scores vs " + std::to_string(labels.size()) + " labels");
  }
  ClassCounts counts;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw Error(ErrorCode::ValidationError, "label at position " + std::to_string(i) + " is not 0 or 1");
    }
    if (std::isnan(scores[i])) {
      throw Error(ErrorCode::NonFiniteScore, "score at position " + std::to_string(i));
    }
    labels[i] == 1 ? ++counts.positives : ++counts.negatives;
  }
  return counts;
}

ClassCounts check_two_class(std::span<const double> scores, std::span<const int> labels) {
  const auto counts = check_scored(scores, labels);
  if (counts.positives == 0 || counts.negatives == 0) {
    throw Error(ErrorCode::SingleClass, "both labels must be present");
  }
  return counts;
}

std::vector<std::size_t> order_by_score(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return order;
}

}  // namespace

double RocCurve::area() const {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const auto& a = points[i - 1];
    const auto& b = points[i];
    total += (b.false_positive_rate - a.false_positive_rate) *
             (b.true_positive_rate + a.true_positive_rate) / 2.0;
  }
  return total;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  const auto counts = check_two_class(scores, labels);
  const auto order = order_by_score(scores);

  // Sum of 1-based average ranks held by the positives.
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::size_t group_positives = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      group_positives += static_cast<std::size_t>(labels[order[j]]);
      ++j;
    }
    const double average_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    positive_rank_sum += average_rank * static_cast<double>(group_positives);
    i = j;
  }

  const auto p = static_cast<double>(counts.positives);
  const auto n = static_cast<double>(counts.negatives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels) {
  const auto counts = check_two_class(scores, labels);
  auto order = order_by_score(scores);
  std::reverse(order.begin(), order.end());

  const auto p = static_cast<double>(counts.positives);
  const auto n = static_cast<double>(counts.negatives);
  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double score = scores[order[i]];
    while (i < order.size() && scores[order[i]] == score) {
      labels[order[i]] == 1 ? ++tp : ++fp;
      ++i;
    }
    curve.points.push_back({static_cast<double>(fp) / n, static_cast<double>(tp) / p, score});
  }
  return curve;
}

double accuracy_at(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_scored(scores, labels);
  if (scores.empty()) throw Error(ErrorCode::EmptyInput, "no scores");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (verdict(scores[i], threshold) == (labels[i] == 1)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double tune_threshold(std::span<const double> scores, std::span<const int> labels) {
  const auto counts = check_two_class(scores, labels);
  const auto order = order_by_score(scores);

  // Candidate thresholds ascending; below the lowest, everything is positive.
  std::size_t correct = counts.positives;
  double best_threshold = std::nextafter(scores[order.front()], -std::numeric_limits<double>::infinity());
  std::size_t best_correct = correct;

  std::size_t i = 0;
  while (i < order.size()) {
    const double low = scores[order[i]];
    while (i < order.size() && scores[order[i]] == low) {
      // This record drops below the next candidate and is called negative.
      labels[order[i]] == 1 ? --correct : ++correct;
      ++i;
    }
    double candidate;
    if (i < order.size()) {
      const double high = scores[order[i]];
      candidate = (low + high) / 2.0;
      if (candidate <= low) candidate = high;
    } else {
      candidate = std::nextafter(low, std::numeric_limits<double>::infinity());
    }
    if (correct > best_correct) {
      best_correct = correct;
      best_threshold = candidate;
    }
  }
  return best_threshold;
}

std::vector<EvalRecord> parse_dataset(std::string_view text, bool expand_sentences) {
  std::vector<EvalRecord> records;
  std::size_t line_number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_number;
    if (trim(line).empty()) {
      if (end == text.size()) break;
      continue;
    }

    json object;
    try {
      object = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_number) + ": " + e.what());
    }
    EvalRecord record;
    try {
      record = record_from_json(object);
    } catch (const Error& e) {
      throw Error(e.code(), e.detail() + " (line " + std::to_string(line_number) + ")");
    }
    if (expand_sentences) {
      std::vector<std::string> sentences;
      for (const auto& paragraph : record.sources) {
        for (auto& s : split_sentences(paragraph)) sentences.push_back(std::move(s.text));
      }
      record.sources = std::move(sentences);
    }
    records.push_back(std::move(record));
    if (end == text.size()) break;
  }
  return records;
}

std::vector<EvalRecord> load_dataset(const std::filesystem::path& path, bool expand_sentences) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open dataset " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset(buffer.str(), expand_sentences);
}

EvalReport evaluate(const CheckFunction& pipeline, const std::vector<EvalRecord>& dataset,
                    const PipelineConfig& config, const EvaluateOptions& options) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyInput, "dataset has no records");
  const auto started = std::chrono::steady_clock::now();

  std::vector<std::optional<double>> scores(dataset.size());
  std::vector<std::string> failures(dataset.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (auto i = next.fetch_add(1); i < dataset.size(); i = next.fetch_add(1)) {
      const auto& record = dataset[i];
      try {
        const auto input = CheckInput::from_sources(record.query, record.answer, record.sources);
        scores[i] = pipeline(input).aggregate;
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  const auto workers = std::clamp<std::size_t>(options.workers, 1, dataset.size());
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  EvalReport report;
  report.dataset_id = options.dataset_id;
  report.config_snapshot = config;
  report.threshold = config.threshold;
  std::vector<double> kept_scores;
  std::vector<int> kept_labels;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (scores[i]) {
      report.per_record.push_back({dataset[i].id, *scores[i], dataset[i].label});
      kept_scores.push_back(*scores[i]);
      kept_labels.push_back(dataset[i].label);
    } else {
      report.excluded.push_back({dataset[i].id, failures[i]});
    }
  }
  report.n_records = report.per_record.size();
  if (report.per_record.empty()) {
    throw Error(ErrorCode::AllRecordsFailed,
                std::to_string(dataset.size()) + " records, first error: " + report.excluded.front().error);
  }

  try {
    report.auc = auc(kept_scores, kept_labels);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingleClass) throw;
    report.auc_note = "SingleClass";
  }
  if (config.threshold) report.accuracy_at_threshold = accuracy_at(kept_scores, kept_labels, *config.threshold);

  report.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - started)
                            .count();
  return report;
}

void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
  write_roc_csv(curve, out);
}

void write_roc_csv(const RocCurve& curve, std::ostream& out) {
  out << "fpr,tpr,threshold\n";
  char row[96];
  for (const auto& point : curve.points) {
    std::snprintf(row, sizeof row, "%.9g,%.9g,%.9g\n", point.false_positive_rate,
                  point.true_positive_rate, point.threshold);
    out << row;
  }
}

std::string run_key(const std::vector<EvalRecord>& dataset, const PipelineConfig& config, std::string_view context) {
  json records = json::array();
  for (const auto& r : dataset) records.push_back(to_json(r));
  std::string payload = records.dump() + "\n" + to_json(config).dump();
  if (!context.empty()) payload += "\n" + std::string(context);
  return sha256_hex(payload);
}

std::filesystem::path persist_run(const EvalReport& report, const std::vector<EvalRecord>& dataset,
                                  const std::filesystem::path& runs_root, std::string_view context) {
  const auto dir = runs_root / run_key(dataset, report.config_snapshot, context);
  std::filesystem::create_directories(dir);
  const auto write = [&](const char* name, const json& body) {
    std::ofstream out(dir / name);
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + (dir / name).string());
    out << body.dump(2) << '\n';
  };
  write("report.json", to_json(report));
  write("config.json", to_json(report.config_snapshot));
  if (!context.empty()) {
    try {
      write("context.json", json::parse(context));
    } catch (const json::parse_error&) {
      write("context.json", json(std::string(context)));
    }
  }
  return dir;
}

}  // namespace provenance
