#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "provenance/domain.hpp"
#include "provenance/factcheck.hpp"

namespace provenance {

/// Labeled triplet. label 1 = factual (entailed), 0 = hallucination.
struct EvalRecord {
  std::string id;
  std::string query;
  std::string answer;
  std::vector<std::string> sources;
  int label = 0;
};

struct RocPoint {
  double false_positive_rate = 0.0;
  double true_positive_rate = 0.0;
  /// Records scoring at or above this value are called positive; +inf for the origin.
  double threshold = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;

  /// Trapezoidal area under the points.
  double area() const;
};

struct RecordScore {
  std::string id;
  double score = 0.0;
  int label = 0;
};

struct Exclusion {
  std::string id;
  std::string error;
};

struct EvalReport {
  std::string dataset_id;
  std::size_t n_records = 0;
  std::optional<double> auc;
  /// Why auc is absent, e.g. "SingleClass".
  std::string auc_note;
  std::optional<double> accuracy_at_threshold;
  std::optional<double> threshold;
  std::vector<RecordScore> per_record;
  std::vector<Exclusion> excluded;
  PipelineConfig config_snapshot;
  std::int64_t wall_time_ms = 0;
};

/// Reads one JSON object per line (blank lines skipped; unknown fields
/// ignored). With `expand_sentences` every source paragraph is replaced by its
/// sentences. Throws ParseError carrying the line number, or ValidationError
/// naming the offending field.
std::vector<EvalRecord> load_dataset(const std::filesystem::path& path, bool expand_sentences);

/// Same as load_dataset but from an in-memory string.
std::vector<EvalRecord> parse_dataset(std::string_view text, bool expand_sentences);

/// Mann-Whitney statistic via average ranks, O(n log n). Ties count one half.
double auc(std::span<const double> scores, std::span<const int> labels);

/// One point per distinct score, swept from the highest score down, starting
/// at (0, 0) and ending at (1, 1).
RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels);

/// Fraction of records whose verdict at `threshold` equals (label == 1).
double accuracy_at(std::span<const double> scores, std::span<const int> labels, double threshold);

/// Accuracy-maximizing threshold among the midpoints between adjacent distinct
/// scores and one value just below the minimum and just above the maximum.
/// Ties go to the smallest threshold.
double tune_threshold(std::span<const double> scores, std::span<const int> labels);

using CheckFunction = std::function<FactualityReport(const CheckInput&)>;

struct EvaluateOptions {
  std::string dataset_id;
  std::size_t workers = 1;
};

/// Scores every record with `pipeline`. Records whose check throws are listed
/// in `excluded` and left out of the metrics; the metrics are a single
/// reduction over the ordered score list, so `workers` never changes them.
EvalReport evaluate(const CheckFunction& pipeline, const std::vector<EvalRecord>& dataset,
                    const PipelineConfig& config, const EvaluateOptions& options = {});

/// Header "fpr,tpr,threshold", one row per point.
void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path);
void write_roc_csv(const RocCurve& curve, std::ostream& out);

/// Hex SHA-256 over the dataset records and configuration. A non-empty
/// `context` (backend descriptors, pipeline kind) is hashed as well.
std::string run_key(const std::vector<EvalRecord>& dataset, const PipelineConfig& config,
                    std::string_view context = {});

/// Writes report.json and config.json (plus context.json when `context` is
/// non-empty) into `runs_root / run_key` and returns that directory.
std::filesystem::path persist_run(const EvalReport& report, const std::vector<EvalRecord>& dataset,
                                  const std::filesystem::path& runs_root, std::string_view context = {});

}  // namespace provenance
