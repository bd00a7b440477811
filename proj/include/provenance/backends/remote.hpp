#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "provenance/baselines.hpp"
#include "provenance/factcheck.hpp"
#include "provenance/relevancy.hpp"

namespace provenance {

/// Where a remote scorer lives. `url` is "http[s]://host[:port][/prefix]".
struct HttpEndpoint {
  std::string url;
  std::chrono::milliseconds timeout{10000};
  /// Items per request; larger inputs are split into several requests.
  std::size_t batch_size = 64;
};

/// POST {prefix}/score  {"query": str, "items": [str]}  ->  {"scores": [number]}
class HttpRelevanceBackend final : public RelevanceBackend {
 public:
  explicit HttpRelevanceBackend(HttpEndpoint endpoint);
  double score_pair(std::string_view query, std::string_view item) const override;
  std::vector<double> score_batch(std::string_view query,
                                  const std::vector<std::string>& items) const override;
  std::string name() const override { return "remote-relevance(" + endpoint_.url + ")"; }

 private:
  HttpEndpoint endpoint_;
};

/// POST {prefix}/entail  {"claim": str, "sources": [str]}  ->  {"scores": [number in [0,1]]}
class HttpNliBackend final : public NliBackend {
 public:
  explicit HttpNliBackend(HttpEndpoint endpoint);
  double entail(std::string_view source, std::string_view claim) const override;
  std::vector<double> entail_batch(const std::vector<std::string>& sources,
                                   std::string_view claim) const override;
  std::string name() const override { return "remote-nli(" + endpoint_.url + ")"; }

 private:
  HttpEndpoint endpoint_;
};

/// POST {prefix}/embed  {"texts": [str]}  ->  {"embeddings": [[number]]}
class HttpEmbeddingBackend final : public EmbeddingBackend {
 public:
  explicit HttpEmbeddingBackend(HttpEndpoint endpoint);
  Eigen::MatrixXd embed(const std::vector<std::string>& texts) const override;
  std::string name() const override { return "remote-embedding(" + endpoint_.url + ")"; }

 private:
  HttpEndpoint endpoint_;
};

}  // namespace provenance
