#pragma once

#include <nlohmann/json.hpp>

#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "provenance/error.hpp"
#include "provenance/interface/config.hpp"

namespace provenance {

enum class PipelineKind { Provenance, Baseline };

/// One check as requested over HTTP or on the command line.
struct CheckRequest {
  std::string query;
  std::string answer;
  std::vector<std::string> sources;
  PipelineConfig config;
  PipelineKind pipeline = PipelineKind::Provenance;
  Similarity similarity = Similarity::Cosine;
};

/// {query, answer, sources, config?, pipeline?, similarity?}. Config entries
/// override `defaults`. Throws ValidationError whose detail starts with the field name.
CheckRequest parse_check_request(const nlohmann::json& body, const PipelineConfig& defaults);

/// The single code path behind the CLI, the service and evaluation.
FactualityReport run_pipeline(const Backends& backends, const CheckInput& input, const PipelineConfig& config,
                              PipelineKind pipeline, Similarity similarity);
FactualityReport run_check(const Backends& backends, const CheckRequest& request);

PipelineKind parse_pipeline_kind(std::string_view text);
std::string_view to_string(PipelineKind kind);

/// 400 for request problems, 502 for backend failures, 422 for other pipeline errors.
int http_status(ErrorCode code);
nlohmann::json error_body(const Error& error);

struct HttpReply {
  int status = 200;
  nlohmann::json body;
  std::vector<std::pair<std::string, std::string>> headers;
};

/// Stage timings as a Server-Timing header value.
std::string server_timing(const StageTimings& timing);

/// Socket-free request handlers. Report bodies carry no timings, so identical
/// requests yield identical bodies; timings travel in the Server-Timing header.
class CheckService {
 public:
  CheckService(ServiceConfig config, Backends backends);

  HttpReply check(std::string_view body) const;
  HttpReply health() const;
  HttpReply effective_config() const;

  const ServiceConfig& config() const { return config_; }

 private:
  ServiceConfig config_;
  Backends backends_;
};

/// HTTP front end over a CheckService: POST /v1/check, GET /healthz, GET /v1/config.
class HttpService {
 public:
  explicit HttpService(const CheckService& service);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds the configured address; port 0 picks a free port. Returns the port.
  int bind();
  /// Serves until stop(); in-flight requests finish before it returns.
  void run();
  /// Blocks until run() is accepting connections.
  void wait_until_ready();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Builds backends, serves until SIGINT or SIGTERM, then drains. Returns an exit code.
int serve(const ServiceConfig& config);

}  // namespace provenance
