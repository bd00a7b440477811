#include "provenance/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "provenance/error.hpp"

namespace provenance {

double round_sig9(double value) {
  if (!std::isfinite(value)) return value;
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.9g", value);
  return std::strtod(buffer, nullptr);
}

json to_json(const PipelineConfig& config) {
  json out = {
      {"selection_strategy", to_string(config.selection_strategy)},
      {"top_k", config.top_k},
      {"top_p", round_sig9(config.top_p)},
      {"aggregation", to_string(config.aggregation)},
      {"temporal_ordering", config.temporal_ordering},
      {"claim_template", config.claim_template},
  };
  out["threshold"] = config.threshold ? json(round_sig9(*config.threshold)) : json(nullptr);
  return out;
}

namespace {

[[noreturn]] void bad_field(const std::string& key, const std::string& expected) {
  throw Error(ErrorCode::ValidationError, key + " (expected " + expected + ")");
}

double number_field(const json& value, const std::string& key) {
  if (!value.is_number()) bad_field(key, "number");
  return value.get<double>();
}

}  // namespace

PipelineConfig apply_overrides(PipelineConfig base, const json& partial) {
  if (partial.is_null()) return base;
  if (!partial.is_object()) bad_field("config", "object");
  for (const auto& [key, value] : partial.items()) {
    if (key == "selection_strategy" || key == "strategy") {
      if (!value.is_string()) bad_field(key, "string");
      try {
        base.selection_strategy = parse_strategy(value.get<std::string>());
      } catch (const Error&) {
        bad_field(key, "\"topk\" or \"topp\"");
      }
    } else if (key == "top_k") {
      if (!value.is_number_integer() || value.get<long long>() < 1) bad_field(key, "integer >= 1");
      base.top_k = value.get<std::size_t>();
    } else if (key == "top_p") {
      base.top_p = number_field(value, key);
    } else if (key == "aggregation") {
      if (!value.is_string()) bad_field(key, "string");
      try {
        base.aggregation = parse_aggregation(value.get<std::string>());
      } catch (const Error&) {
        bad_field(key, "\"min\", \"max\" or \"weighted_average\"");
      }
    } else if (key == "threshold") {
      if (value.is_null()) {
        base.threshold.reset();
      } else {
        base.threshold = number_field(value, key);
      }
    } else if (key == "temporal_ordering") {
      if (!value.is_boolean()) bad_field(key, "boolean");
      base.temporal_ordering = value.get<bool>();
    } else if (key == "claim_template") {
      if (!value.is_string()) bad_field(key, "string");
      base.claim_template = value.get<std::string>();
    } else {
      throw Error(ErrorCode::ValidationError, key + " (unknown configuration key)");
    }
  }
  try {
    base.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ValidationError, "config: " + e.detail());
  }
  return base;
}

json to_json(const FactualityReport& report, bool include_timing) {
  json relevance = json::array();
  for (const auto& r : report.relevance) {
    relevance.push_back({{"index", r.item_index},
                         {"raw", round_sig9(r.raw)},
                         {"probability", r.probability ? json(round_sig9(*r.probability)) : json(nullptr)}});
  }
  json sources = json::array();
  for (const auto& s : report.per_source) {
    sources.push_back({{"index", s.item.index},
                       {"text", s.item.text},
                       {"weight", round_sig9(s.weight)},
                       {"probability", round_sig9(s.probability)},
                       {"score", round_sig9(s.score)}});
  }

  json out = {
      {"pipeline", report.baseline ? "baseline" : "provenance"},
      {"claim", {{"text", report.claim.text}, {"template_id", report.claim.template_id}}},
      {"aggregate", round_sig9(report.aggregate)},
      {"aggregation_method", to_string(report.aggregation_method)},
      {"per_source", std::move(sources)},
      {"relevance", std::move(relevance)},
      {"config", to_json(report.config_snapshot)},
  };
  if (report.verdict) out["verdict"] = *report.verdict;
  if (report.baseline) {
    out["baseline"] = {{"similarity", to_string(report.baseline->similarity)},
                       {"sentence_count", report.baseline->sentence_count}};
  }
  if (include_timing) {
    out["timing_ms"] = {{"relevance", report.timing.relevance_ms},
                        {"selection", report.timing.selection_ms},
                        {"nli", report.timing.nli_ms},
                        {"aggregate", report.timing.aggregate_ms},
                        {"total", report.timing.total_ms}};
  }
  return out;
}

json to_json(const EvalReport& report) {
  json records = json::array();
  for (const auto& r : report.per_record) {
    records.push_back({{"id", r.id}, {"score", round_sig9(r.score)}, {"label", r.label}});
  }
  json excluded = json::array();
  for (const auto& e : report.excluded) excluded.push_back({{"id", e.id}, {"error", e.error}});

  json out = {
      {"dataset_id", report.dataset_id},
      {"n_records", report.n_records},
      {"n_excluded", report.excluded.size()},
      {"per_record", std::move(records)},
      {"excluded", std::move(excluded)},
      {"config", to_json(report.config_snapshot)},
      {"wall_time_ms", report.wall_time_ms},
  };
  out["auc"] = report.auc ? json(round_sig9(*report.auc)) : json(nullptr);
  if (!report.auc_note.empty()) out["auc_note"] = report.auc_note;
  if (report.threshold) {
    out["threshold"] = round_sig9(*report.threshold);
    out["accuracy_at_threshold"] =
        report.accuracy_at_threshold ? json(round_sig9(*report.accuracy_at_threshold)) : json(nullptr);
  }
  return out;
}

json to_json(const EvalRecord& record) {
  return {{"id", record.id},
          {"query", record.query},
          {"answer", record.answer},
          {"sources", record.sources},
          {"label", record.label}};
}

EvalRecord record_from_json(const json& object) {
  if (!object.is_object()) throw Error(ErrorCode::ValidationError, "record (expected object)");
  const auto require = [&](const char* key) -> const json& {
    const auto it = object.find(key);
    if (it == object.end() || it->is_null()) throw Error(ErrorCode::ValidationError, key);
    return *it;
  };

  EvalRecord record;
  const auto& id = require("id");
  if (id.is_string()) {
    record.id = id.get<std::string>();
  } else if (id.is_number_integer()) {
    record.id = std::to_string(id.get<long long>());
  } else {
    bad_field("id", "string");
  }

  const auto& query = require("query");
  if (!query.is_string() || trim(query.get<std::string>()).empty()) bad_field("query", "non-empty string");
  record.query = trim(query.get<std::string>());

  const auto& answer = require("answer");
  if (!answer.is_string() || trim(answer.get<std::string>()).empty()) bad_field("answer", "non-empty string");
  record.answer = trim(answer.get<std::string>());

  const auto& sources = require("sources");
  if (!sources.is_array() || sources.empty()) bad_field("sources", "non-empty array of strings");
  for (const auto& s : sources) {
    if (!s.is_string() || trim(s.get<std::string>()).empty()) {
      bad_field("sources", "non-empty array of strings");
    }
    record.sources.push_back(trim(s.get<std::string>()));
  }

  const auto& label = require("label");
  if (!label.is_number_integer() || (label.get<long long>() != 0 && label.get<long long>() != 1)) {
    bad_field("label", "0 or 1");
  }
  record.label = label.get<int>();
  return record;
}

}  // namespace provenance
