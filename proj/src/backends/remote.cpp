#include "provenance/backends/remote.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>

#include "provenance/error.hpp"

namespace provenance {

using json = nlohmann::json;

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::ConfigError, "endpoint URL needs a scheme: " + url);
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorCode::ConfigError, "unsupported URL scheme: " + scheme);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl parsed;
  parsed.origin = url.substr(0, path_start);
  if (path_start != std::string::npos) parsed.prefix = url.substr(path_start);
  while (!parsed.prefix.empty() && parsed.prefix.back() == '/') parsed.prefix.pop_back();
  if (parsed.origin.size() <= scheme_end + 3) throw Error(ErrorCode::ConfigError, "endpoint URL has no host: " + url);
  return parsed;
}

json post(const HttpEndpoint& endpoint, const std::string& route, const json& body) {
  const auto url = parse_url(endpoint.url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(endpoint.timeout);
  client.set_read_timeout(endpoint.timeout);
  client.set_write_timeout(endpoint.timeout);

  const auto path = url.prefix + route;
  const auto result = client.Post(path, body.dump(), "application/json");
  if (!result) {
    throw Error(ErrorCode::BackendFailure,
                "POST " + endpoint.url + route + ": " + httplib::to_string(result.error()));
  }
  if (result->status != 200) {
    throw Error(ErrorCode::BackendFailure,
                "POST " + endpoint.url + route + " returned HTTP " + std::to_string(result->status));
  }
  try {
    return json::parse(result->body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::BackendFailure, "POST " + endpoint.url + route + ": invalid JSON: " + e.what());
  }
}

std::vector<double> read_scores(const json& reply, std::size_t expected, const std::string& what) {
  const auto it = reply.find("scores");
  if (it == reply.end() || !it->is_array() || it->size() != expected) {
    throw Error(ErrorCode::BackendFailure, what + ": expected \"scores\" with " + std::to_string(expected) + " numbers");
  }
  std::vector<double> out;
  out.reserve(expected);
  for (const auto& v : *it) {
    if (!v.is_number()) throw Error(ErrorCode::BackendFailure, what + ": non-numeric score");
    out.push_back(v.get<double>());
  }
  return out;
}

/// Calls `request(begin, end)` over consecutive slices of at most batch_size.
template <typename Request>
std::vector<double> batched(std::size_t total, std::size_t batch_size, Request&& request) {
  std::vector<double> out;
  out.reserve(total);
  const auto step = std::max<std::size_t>(batch_size, 1);
  for (std::size_t begin = 0; begin < total; begin += step) {
    const auto end = std::min(total, begin + step);
    auto part = request(begin, end);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

}  // namespace

HttpRelevanceBackend::HttpRelevanceBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  parse_url(endpoint_.url);
}

double HttpRelevanceBackend::score_pair(std::string_view query, std::string_view item) const {
  return score_batch(query, {std::string(item)}).front();
}

std::vector<double> HttpRelevanceBackend::score_batch(std::string_view query,
                                                      const std::vector<std::string>& items) const {
  return batched(items.size(), endpoint_.batch_size, [&](std::size_t begin, std::size_t end) {
    const std::vector<std::string> slice(items.begin() + static_cast<std::ptrdiff_t>(begin),
                                         items.begin() + static_cast<std::ptrdiff_t>(end));
    const auto reply = post(endpoint_, "/score", {{"query", query}, {"items", slice}});
    return read_scores(reply, slice.size(), name());
  });
}

HttpNliBackend::HttpNliBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  parse_url(endpoint_.url);
}

double HttpNliBackend::entail(std::string_view source, std::string_view claim) const {
  return entail_batch({std::string(source)}, claim).front();
}

std::vector<double> HttpNliBackend::entail_batch(const std::vector<std::string>& sources,
                                                 std::string_view claim) const {
  return batched(sources.size(), endpoint_.batch_size, [&](std::size_t begin, std::size_t end) {
    const std::vector<std::string> slice(sources.begin() + static_cast<std::ptrdiff_t>(begin),
                                         sources.begin() + static_cast<std::ptrdiff_t>(end));
    const auto reply = post(endpoint_, "/entail", {{"claim", claim}, {"sources", slice}});
    return read_scores(reply, slice.size(), name());
  });
}

HttpEmbeddingBackend::HttpEmbeddingBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  parse_url(endpoint_.url);
}

Eigen::MatrixXd HttpEmbeddingBackend::embed(const std::vector<std::string>& texts) const {
  std::vector<std::vector<double>> rows;
  rows.reserve(texts.size());
  const auto step = std::max<std::size_t>(endpoint_.batch_size, 1);
  for (std::size_t begin = 0; begin < texts.size(); begin += step) {
    const auto end = std::min(texts.size(), begin + step);
    const std::vector<std::string> slice(texts.begin() + static_cast<std::ptrdiff_t>(begin),
                                         texts.begin() + static_cast<std::ptrdiff_t>(end));
    const auto reply = post(endpoint_, "/embed", {{"texts", slice}});
    const auto it = reply.find("embeddings");
    if (it == reply.end() || !it->is_array() || it->size() != slice.size()) {
      throw Error(ErrorCode::BackendFailure, name() + ": expected \"embeddings\" with one row per text");
    }
    for (const auto& row : *it) {
      if (!row.is_array()) throw Error(ErrorCode::BackendFailure, name() + ": embedding rows must be arrays");
      std::vector<double> values;
      for (const auto& v : row) {
        if (!v.is_number()) throw Error(ErrorCode::BackendFailure, name() + ": non-numeric embedding");
        values.push_back(v.get<double>());
      }
      rows.push_back(std::move(values));
    }
  }

  const auto dim = rows.empty() ? std::size_t{0} : rows.front().size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != dim || dim == 0) {
      throw Error(ErrorCode::BackendFailure, name() + ": embeddings differ in dimension");
    }
    for (std::size_t c = 0; c < dim; ++c) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return out;
}

}  // namespace provenance
