#include "provenance/interface/cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "provenance/error.hpp"
#include "provenance/evaluation.hpp"
#include "provenance/interface/config.hpp"
#include "provenance/interface/convert.hpp"
#include "provenance/interface/service.hpp"
#include "provenance/json_io.hpp"

namespace provenance {

using json = nlohmann::json;

namespace {

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Thrown for bad arguments discovered after CLI11 parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;
  bool no_temporal = false;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& flags) {
  cmd->add_option("--config", flags.config_file, "JSON config file (also PROVENANCE_CONFIG)");
  const auto setting = [&](const char* flag, const char* key, const char* help) {
    cmd->add_option_function<std::string>(
        flag, [&flags, key](const std::string& v) { flags.values[key] = v; }, help);
  };
  setting("--relevance", "relevance", "relevance backend: stub:overlap | stub:table=PATH | remote:URL | local:DIR");
  setting("--nli", "nli", "NLI backend: stub:overlap | stub:table=PATH | remote:URL | local:DIR");
  setting("--embedding", "embedding", "embedding backend: stub:hash[=DIM] | stub:hash-unit | remote:URL | local:DIR");
  setting("--strategy", "strategy", "source selection: topk | topp");
  setting("--top-k", "top_k", "sources kept by topk");
  setting("--top-p", "top_p", "cumulative probability for topp");
  setting("--aggregation", "aggregation", "min | max | weighted_average");
  setting("--threshold", "threshold", "verdict threshold, or none");
  setting("--claim-template", "claim_template", "claim template with {query} and {answer}");
  cmd->add_flag("--no-temporal", flags.no_temporal, "keep selected sources in relevance order");
}

ServiceConfig resolve(const ConfigFlags& flags, const EnvLookup& env) {
  auto settings = flags.values;
  if (flags.no_temporal) settings["temporal_ordering"] = "false";
  std::optional<std::filesystem::path> file;
  if (!flags.config_file.empty()) file = flags.config_file;
  return resolve_config(file, settings, env);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::string> read_sources(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
  if (j.is_object() && j.contains("sources")) j = j["sources"];
  if (!j.is_array()) throw UsageError(path + ": expected a JSON array of strings");
  std::vector<std::string> sources;
  for (const auto& s : j) {
    if (!s.is_string()) throw UsageError(path + ": expected a JSON array of strings");
    sources.push_back(s.get<std::string>());
  }
  return sources;
}

std::string format_score(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.9g", value);
  return buffer;
}

json backend_context(const ServiceConfig& config, PipelineKind kind, Similarity similarity) {
  json context = {{"pipeline", to_string(kind)},
                  {"relevance", config.relevance.to_json()},
                  {"nli", config.nli.to_json()}};
  if (kind == PipelineKind::Baseline) {
    context["embedding"] = config.embedding.to_json();
    context["similarity"] = to_string(similarity);
  }
  return context;
}

struct CheckArgs {
  ConfigFlags flags;
  std::string query;
  std::string answer;
  std::string sources_file;
  std::vector<std::string> sources;
  std::string pipeline = "provenance";
  std::string similarity = "cosine";
  bool timing = false;
  bool compact = false;
};

int run_check_command(const CheckArgs& a, const EnvLookup& env, std::ostream& out) {
  const auto config = resolve(a.flags, env);
  CheckRequest request;
  request.query = a.query;
  request.answer = a.answer;
  request.sources = a.sources;
  if (!a.sources_file.empty()) {
    const auto from_file = read_sources(a.sources_file);
    request.sources.insert(request.sources.end(), from_file.begin(), from_file.end());
  }
  if (request.sources.empty()) throw UsageError("give --sources FILE or at least one --source");
  request.config = config.pipeline;
  request.pipeline = parse_pipeline_kind(a.pipeline);
  request.similarity = parse_similarity(a.similarity);

  const auto backends = make_backends(config, request.pipeline == PipelineKind::Baseline);
  const auto report = to_json(run_check(backends, request), a.timing);
  out << (a.compact ? report.dump() : report.dump(2)) << '\n';
  return kExitOk;
}

struct EvalArgs {
  ConfigFlags flags;
  std::string dataset;
  std::string dataset_id;
  bool expand = false;
  std::string runs_dir = "runs";
  bool no_persist = false;
  std::string roc_out;
  std::size_t workers = 1;
  bool tune = false;
  std::string pipeline = "provenance";
  std::string similarity = "cosine";
};

int run_eval_command(const EvalArgs& a, const EnvLookup& env, std::ostream& out) {
  const auto config = resolve(a.flags, env);
  const auto kind = parse_pipeline_kind(a.pipeline);
  const auto similarity = parse_similarity(a.similarity);
  const auto dataset = load_dataset(a.dataset, a.expand);
  const auto backends = make_backends(config, kind == PipelineKind::Baseline);

  EvaluateOptions options;
  options.dataset_id = a.dataset_id.empty() ? std::filesystem::path(a.dataset).stem().string() : a.dataset_id;
  options.workers = a.workers;
  const CheckFunction pipeline = [&](const CheckInput& input) {
    return run_pipeline(backends, input, config.pipeline, kind, similarity);
  };
  const auto report = evaluate(pipeline, dataset, config.pipeline, options);

  out << "AUC: " << (report.auc ? format_score(*report.auc) : "undefined (" + report.auc_note + ")") << " (records "
      << report.per_record.size() << ", excluded " << report.excluded.size() << ")\n";
  if (report.accuracy_at_threshold) {
    out << "accuracy@" << format_score(*report.threshold) << ": " << format_score(*report.accuracy_at_threshold)
        << '\n';
  }

  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& r : report.per_record) {
    scores.push_back(r.score);
    labels.push_back(r.label);
  }
  if (a.tune && report.auc) {
    const double t = tune_threshold(scores, labels);
    out << "tuned threshold: " << format_score(t) << " (accuracy " << format_score(accuracy_at(scores, labels, t))
        << ")\n";
  }
  if (!a.roc_out.empty()) {
    if (!report.auc) throw Error(ErrorCode::SingleClass, "ROC needs both labels among scored records");
    write_roc_csv(roc_curve(scores, labels), a.roc_out);
    out << "roc: " << a.roc_out << '\n';
  }
  if (!a.no_persist) {
    const auto dir = persist_run(report, dataset, a.runs_dir, backend_context(config, kind, similarity).dump());
    out << "run: " << dir.string() << '\n';
  }
  return kExitOk;
}

struct RocArgs {
  std::string input;
  std::string out;
};

int run_roc_command(const RocArgs& a, std::ostream& out) {
  const auto text = read_file(a.input);
  std::vector<double> scores;
  std::vector<int> labels;
  const auto take = [&](const json& row) {
    if (!row.contains("score") || !row["score"].is_number() || !row.contains("label") ||
        !row["label"].is_number_integer()) {
      throw Error(ErrorCode::ValidationError, "score/label (each row needs a numeric score and an integer label)");
    }
    scores.push_back(row["score"].get<double>());
    labels.push_back(row["label"].get<int>());
  };
  try {
    const auto first = text.find_first_not_of(" \t\r\n");
    const auto whole = first != std::string::npos && text[first] == '{' ? json::parse(text, nullptr, false) : json();
    if (whole.is_object() && whole.contains("per_record")) {
      for (const auto& row : whole["per_record"]) take(row);
    } else {
      std::istringstream lines(text);
      std::size_t n = 0;
      for (std::string line; std::getline(lines, line);) {
        ++n;
        if (trim(line).empty()) continue;
        try {
          take(json::parse(line));
        } catch (const json::parse_error& e) {
          throw Error(ErrorCode::ParseError, "line " + std::to_string(n) + ": " + e.what());
        }
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  const auto curve = roc_curve(scores, labels);
  if (a.out.empty()) {
    write_roc_csv(curve, out);
  } else {
    write_roc_csv(curve, a.out);
    out << "AUC: " << format_score(auc(scores, labels)) << " (points " << curve.points.size() << ")\n";
  }
  return kExitOk;
}

struct ConvertArgs {
  std::string format;
  std::string input;
  std::string out;
  std::string query;
};

int run_convert_command(const ConvertArgs& a, std::ostream& out, std::ostream& err) {
  ConvertOptions options;
  if (!a.query.empty()) options.default_query = a.query;
  const auto records = convert_corpus(a.format, read_file(a.input), options);
  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw UsageError("cannot write " + a.out);
  }
  std::ostream& sink = a.out.empty() ? out : file;
  for (const auto& r : records) sink << to_json(r).dump() << '\n';
  if (!a.out.empty()) err << "wrote " << records.size() << " records to " << a.out << '\n';
  return kExitOk;
}

struct ServeArgs {
  ConfigFlags flags;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
  CLI::App app{"Factuality checking for retrieval-augmented answers", "provenance"};
  app.require_subcommand(1);

  CheckArgs check_args;
  auto* check = app.add_subcommand("check", "score one answer against its sources");
  check->add_option("--query", check_args.query, "user question")->required();
  check->add_option("--answer", check_args.answer, "generated answer")->required();
  check->add_option("--sources", check_args.sources_file, "JSON file holding an array of source strings");
  check->add_option("--source", check_args.sources, "a source text (repeatable)");
  check->add_option("--pipeline", check_args.pipeline, "provenance | baseline")->capture_default_str();
  check->add_option("--similarity", check_args.similarity, "baseline similarity: dot | cosine")->capture_default_str();
  check->add_flag("--timing", check_args.timing, "include stage timings in the report");
  check->add_flag("--compact", check_args.compact, "single-line JSON");
  add_config_flags(check, check_args.flags);

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "score a labeled JSONL dataset and report AUC");
  eval->add_option("--dataset", eval_args.dataset, "JSONL file of {id, query, answer, sources, label}")->required();
  eval->add_option("--dataset-id", eval_args.dataset_id, "name recorded in the report (default: file stem)");
  eval->add_flag("--expand-sentences", eval_args.expand, "split source paragraphs into sentences");
  eval->add_option("--runs-dir", eval_args.runs_dir, "where run directories are written")->capture_default_str();
  eval->add_flag("--no-persist", eval_args.no_persist, "do not write a run directory");
  eval->add_option("--roc-out", eval_args.roc_out, "write the ROC curve as CSV");
  eval->add_option("--workers", eval_args.workers, "records scored in parallel")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  eval->add_flag("--tune-threshold", eval_args.tune, "print the accuracy-maximizing threshold");
  eval->add_option("--pipeline", eval_args.pipeline, "provenance | baseline")->capture_default_str();
  eval->add_option("--similarity", eval_args.similarity, "baseline similarity: dot | cosine")->capture_default_str();
  add_config_flags(eval, eval_args.flags);

  RocArgs roc_args;
  auto* roc = app.add_subcommand("roc", "ROC curve from an eval report or JSONL of {score, label}");
  roc->add_option("--input", roc_args.input, "report.json or JSONL")->required();
  roc->add_option("--out", roc_args.out, "CSV path (default: standard output)");

  ConvertArgs convert_args;
  auto* convert = app.add_subcommand("convert", "convert a public corpus to JSONL triplets");
  convert->add_option("--format", convert_args.format, "corpus format")
      ->required()
      ->check(CLI::IsMember(converter_names()));
  convert->add_option("--input", convert_args.input, "corpus file")->required();
  convert->add_option("--out", convert_args.out, "JSONL path (default: standard output)");
  convert->add_option("--query", convert_args.query, "query for corpora without questions");

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
  serve_cmd->add_option_function<std::string>(
      "--listen", [&](const std::string& v) { serve_args.flags.values["listen"] = v; }, "HOST:PORT");
  serve_cmd->add_option_function<std::string>(
      "--max-concurrent", [&](const std::string& v) { serve_args.flags.values["max_concurrent_requests"] = v; },
      "requests handled in parallel");
  serve_cmd->add_option_function<std::string>(
      "--request-timeout-ms", [&](const std::string& v) { serve_args.flags.values["request_timeout_ms"] = v; },
      "per-request socket and backend timeout");
  add_config_flags(serve_cmd, serve_args.flags);

  std::vector<std::string> argv_storage{"provenance"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    if (const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
      err << sub->help();
    } else {
      err << app.help();
    }
    return kExitUsage;
  }

  try {
    if (check->parsed()) return run_check_command(check_args, env, out);
    if (eval->parsed()) return run_eval_command(eval_args, env, out);
    if (roc->parsed()) return run_roc_command(roc_args, out);
    if (convert->parsed()) return run_convert_command(convert_args, out, err);
    if (serve_cmd->parsed()) return serve(resolve(serve_args.flags, env));
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    const bool usage = e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::InvalidParameter;
    return usage ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace provenance
