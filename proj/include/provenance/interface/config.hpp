#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "provenance/baselines.hpp"
#include "provenance/domain.hpp"
#include "provenance/factcheck.hpp"
#include "provenance/relevancy.hpp"

namespace provenance {

/// Which backend serves a role and where its assets live.
///
/// Text form: "stub:overlap", "stub:table=PATH", "stub:hash", "stub:hash-unit",
/// "stub:hash=DIM", "stub:hash-unit=DIM", "remote:URL", "local:MODEL_DIR".
/// JSON form: {"kind": "stub"|"remote"|"local", "mode": ..., "path": ..., "url": ...,
///             "model": ..., "timeout_ms": ..., "batch_size": ...}
struct BackendDescriptor {
  enum class Kind { Local, Remote, Stub };

  Kind kind = Kind::Stub;
  std::string mode = "overlap";  // stub: overlap | table | hash | hash-unit
  std::string location;          // table path, endpoint URL or model directory
  std::optional<std::chrono::milliseconds> timeout;
  std::size_t batch_size = 64;
  long dimension = 64;  // hashed embeddings

  static BackendDescriptor parse(std::string_view text);
  static BackendDescriptor from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  std::string describe() const;
  bool operator==(const BackendDescriptor&) const = default;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  BackendDescriptor relevance;
  BackendDescriptor nli;
  BackendDescriptor embedding = BackendDescriptor::parse("stub:hash");
  PipelineConfig pipeline;
  std::chrono::milliseconds request_timeout{30000};
  std::size_t max_concurrent_requests = 4;

  /// Throws ConfigError.
  void validate() const;
  nlohmann::json to_json() const;
};

/// Settings keyed by their environment-variable suffix in lowercase
/// (listen, relevance, nli, embedding, strategy, top_k, top_p, aggregation,
/// threshold, temporal_ordering, claim_template, request_timeout_ms,
/// max_concurrent_requests).
using Settings = std::map<std::string, std::string>;

/// Applies a JSON config file: {"listen", "backends": {"relevance", "nli",
/// "embedding"}, "pipeline": {...}, "request_timeout_ms", "max_concurrent_requests"}.
void apply_config_file(ServiceConfig& config, const std::filesystem::path& path);
void apply_config_json(ServiceConfig& config, const nlohmann::json& j);

/// Applies string settings; `origin` labels errors (e.g. "environment").
void apply_settings(ServiceConfig& config, const Settings& settings, const std::string& origin);

/// PROVENANCE_* variables from `lookup` (defaults to std::getenv).
Settings environment_settings(const std::function<std::optional<std::string>(const std::string&)>& lookup = {});

/// Defaults, then the file named by `config_file` or PROVENANCE_CONFIG, then
/// the environment, then `flags`. The result is validated.
ServiceConfig resolve_config(const std::optional<std::filesystem::path>& config_file, const Settings& flags,
                             const std::function<std::optional<std::string>(const std::string&)>& lookup = {});

struct Backends {
  std::shared_ptr<const RelevanceBackend> relevance;
  std::shared_ptr<const NliBackend> nli;
  std::shared_ptr<const EmbeddingBackend> embedding;
};

/// Instantiates the configured backends. Local models named by several roles
/// are loaded once. The embedding backend is built only when `with_embedding` is set.
Backends make_backends(const ServiceConfig& config, bool with_embedding = true);

}  // namespace provenance
