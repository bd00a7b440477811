#include "provenance/interface/service.hpp"

#include "provenance/json_io.hpp"

// After the Eigen-based headers: <resolv.h> defines an _res macro.
#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <csignal>
#include <cstdio>
#include <pthread.h>
#include <thread>

namespace provenance {

using json = nlohmann::json;

namespace {

constexpr const char* kRequestFields[] = {"query", "answer", "sources", "config", "pipeline", "similarity"};

[[noreturn]] void invalid(const std::string& field, const std::string& expected) {
  throw Error(ErrorCode::ValidationError, field + " (" + expected + ")");
}

std::string string_field(const json& body, const char* field) {
  const auto it = body.find(field);
  if (it == body.end() || it->is_null()) invalid(field, "required string");
  if (!it->is_string()) invalid(field, "expected string");
  return it->get<std::string>();
}

}  // namespace

CheckRequest parse_check_request(const json& body, const PipelineConfig& defaults) {
  if (!body.is_object()) invalid("body", "expected JSON object");
  for (const auto& [key, value] : body.items()) {
    if (std::find(std::begin(kRequestFields), std::end(kRequestFields), key) == std::end(kRequestFields)) {
      invalid(key, "unknown field");
    }
  }
  CheckRequest request;
  request.query = string_field(body, "query");
  request.answer = string_field(body, "answer");

  const auto sources = body.find("sources");
  if (sources == body.end() || sources->is_null()) invalid("sources", "required array of strings");
  if (!sources->is_array()) invalid("sources", "expected array of strings");
  for (std::size_t i = 0; i < sources->size(); ++i) {
    if (!(*sources)[i].is_string()) invalid("sources[" + std::to_string(i) + "]", "expected string");
    request.sources.push_back((*sources)[i].get<std::string>());
  }

  request.config = apply_overrides(defaults, body.value("config", json()));

  if (const auto it = body.find("pipeline"); it != body.end()) {
    try {
      request.pipeline = parse_pipeline_kind(it->is_string() ? it->get<std::string>() : std::string());
    } catch (const Error&) {
      invalid("pipeline", "\"provenance\" or \"baseline\"");
    }
  }
  if (const auto it = body.find("similarity"); it != body.end()) {
    try {
      request.similarity = parse_similarity(it->is_string() ? it->get<std::string>() : std::string());
    } catch (const Error&) {
      invalid("similarity", "\"dot\" or \"cosine\"");
    }
  }
  return request;
}

PipelineKind parse_pipeline_kind(std::string_view text) {
  if (text == "provenance") return PipelineKind::Provenance;
  if (text == "baseline") return PipelineKind::Baseline;
  throw Error(ErrorCode::InvalidParameter, "pipeline must be provenance or baseline");
}

std::string_view to_string(PipelineKind kind) {
  return kind == PipelineKind::Provenance ? "provenance" : "baseline";
}

FactualityReport run_pipeline(const Backends& backends, const CheckInput& input, const PipelineConfig& config,
                              PipelineKind pipeline, Similarity similarity) {
  if (pipeline == PipelineKind::Provenance) return check(*backends.relevance, *backends.nli, input, config);
  if (!backends.embedding) throw Error(ErrorCode::ConfigError, "no embedding backend configured");
  BaselineConfig baseline;
  baseline.similarity = similarity;
  baseline.temporal_ordering = config.temporal_ordering;
  baseline.top_p = config.top_p;
  baseline.aggregation = config.aggregation;
  baseline.threshold = config.threshold;
  return baseline_check(*backends.embedding, *backends.nli, input, baseline);
}

FactualityReport run_check(const Backends& backends, const CheckRequest& request) {
  const auto input = [&] {
    try {
      return CheckInput::from_sources(request.query, request.answer, request.sources);
    } catch (const Error& e) {
      throw e.with_stage("input");
    }
  }();
  return run_pipeline(backends, input, request.config, request.pipeline, request.similarity);
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::ValidationError:
    case ErrorCode::EmptyField:
    case ErrorCode::EmptyInput:
    case ErrorCode::MalformedTemplate:
    case ErrorCode::InvalidParameter:
    case ErrorCode::ParseError:
      return 400;
    case ErrorCode::BackendFailure:
    case ErrorCode::NonFiniteScore:
    case ErrorCode::OutOfRangeScore:
      return 502;
    default:
      return 422;
  }
}

json error_body(const Error& error) {
  json e = {{"code", to_string(error.code())}, {"detail", error.detail()}, {"message", error.what()}};
  if (!error.stage().empty()) e["stage"] = error.stage();
  if (error.code() == ErrorCode::ValidationError || error.code() == ErrorCode::EmptyField) {
    e["field"] = error.detail().substr(0, error.detail().find(' '));
  }
  return {{"error", e}};
}

CheckService::CheckService(ServiceConfig config, Backends backends)
    : config_(std::move(config)), backends_(std::move(backends)) {
  if (!backends_.relevance || !backends_.nli) throw Error(ErrorCode::ConfigError, "relevance and NLI backends are required");
}

HttpReply CheckService::check(std::string_view body) const {
  try {
    json parsed;
    try {
      parsed = json::parse(body);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ValidationError, std::string("body (invalid JSON: ") + e.what() + ")");
    }
    const auto request = parse_check_request(parsed, config_.pipeline);
    const auto report = run_check(backends_, request);
    return {200, to_json(report, false), {{"Server-Timing", server_timing(report.timing)}}};
  } catch (const Error& e) {
    return {http_status(e.code()), error_body(e), {}};
  } catch (const std::exception& e) {
    return {500, {{"error", {{"code", "InternalError"}, {"detail", e.what()}, {"message", e.what()}}}}, {}};
  }
}

std::string server_timing(const StageTimings& timing) {
  char buffer[256];
  std::snprintf(buffer, sizeof buffer, "relevance;dur=%.3f, selection;dur=%.3f, nli;dur=%.3f, aggregate;dur=%.3f, total;dur=%.3f",
                timing.relevance_ms, timing.selection_ms, timing.nli_ms, timing.aggregate_ms, timing.total_ms);
  return buffer;
}

HttpReply CheckService::health() const { return {200, {{"status", "ok"}}, {}}; }

HttpReply CheckService::effective_config() const {
  auto body = config_.to_json();
  body["defaults"] = body["pipeline"];
  return {200, body, {}};
}

struct HttpService::Impl {
  explicit Impl(const CheckService& s) : service(s) {}
  const CheckService& service;
  httplib::Server server;
  int port = -1;
};

HttpService::HttpService(const CheckService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& server = impl_->server;
  const auto& config = service.config();
  const auto workers = config.max_concurrent_requests;
  server.new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
  const auto seconds = config.request_timeout.count() / 1000;
  const auto micros = (config.request_timeout.count() % 1000) * 1000;
  server.set_read_timeout(seconds, micros);
  server.set_write_timeout(seconds, micros);

  const auto reply = [](httplib::Response& res, const HttpReply& r) {
    res.status = r.status;
    for (const auto& [name, value] : r.headers) res.set_header(name, value);
    res.set_content(r.body.dump(), "application/json");
  };
  server.Post("/v1/check", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, impl_->service.check(req.body));
  });
  server.Get("/healthz", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, impl_->service.health());
  });
  server.Get("/v1/config", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, impl_->service.effective_config());
  });
}

HttpService::~HttpService() = default;

int HttpService::bind() {
  const auto& config = impl_->service.config();
  if (config.port == 0) {
    impl_->port = impl_->server.bind_to_any_port(config.host);
  } else {
    impl_->port = impl_->server.bind_to_port(config.host, config.port) ? config.port : -1;
  }
  if (impl_->port < 0) {
    throw Error(ErrorCode::ConfigError, "cannot bind " + config.host + ":" + std::to_string(config.port));
  }
  return impl_->port;
}

void HttpService::run() {
  if (impl_->port < 0) bind();
  impl_->server.listen_after_bind();
}

void HttpService::wait_until_ready() { impl_->server.wait_until_ready(); }

void HttpService::stop() { impl_->server.stop(); }

int serve(const ServiceConfig& config) {
  // Route SIGINT/SIGTERM to a waiting thread so shutdown runs outside a signal handler.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  std::unique_ptr<CheckService> service;
  try {
    service = std::make_unique<CheckService>(config, make_backends(config));
  } catch (const Error& e) {
    spdlog::error("startup failed: {}", e.what());
    return 1;
  }
  HttpService http(*service);
  int port = 0;
  try {
    port = http.bind();
  } catch (const Error& e) {
    spdlog::error("startup failed: {}", e.what());
    return 1;
  }
  spdlog::info("listening on {}:{} (relevance {}, nli {})", config.host, port, config.relevance.describe(),
               config.nli.describe());

  std::jthread waiter([&] {
    int received = 0;
    sigwait(&signals, &received);
    spdlog::info("signal {} received, draining", received);
    http.stop();
  });
  http.run();
  // run() can also end without a signal (e.g. listener failure); release the waiter.
  pthread_kill(waiter.native_handle(), SIGTERM);
  return 0;
}

}  // namespace provenance
