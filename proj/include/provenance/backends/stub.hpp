#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "provenance/baselines.hpp"
#include "provenance/factcheck.hpp"
#include "provenance/relevancy.hpp"

namespace provenance {

/// Lowercased alphanumeric words with English stopwords and the claim
/// template's own words removed, in order of first appearance, deduplicated.
std::vector<std::string> content_tokens(std::string_view text);

/// Score table for the lookup stubs.
///
///     {"items": {"<text>": score, ...},
///      "pairs": [{"key": "<query or claim>", "text": "<item or source>", "score": s}, ...],
///      "default": s}
///
/// A pair entry wins over an item entry; "default" applies when neither
/// matches. Without a default an unmatched text is a BackendFailure.
struct LookupTable {
  std::map<std::string, double, std::less<>> items;
  std::map<std::pair<std::string, std::string>, double> pairs;
  std::optional<double> fallback;

  static LookupTable from_json(const nlohmann::json& table);
  static LookupTable load(const std::filesystem::path& path);

  double find(std::string_view key, std::string_view text) const;
};

class LookupRelevanceBackend final : public RelevanceBackend {
 public:
  explicit LookupRelevanceBackend(LookupTable table) : table_(std::move(table)) {}
  double score_pair(std::string_view query, std::string_view item) const override;
  std::string name() const override { return "stub-lookup-relevance"; }

 private:
  LookupTable table_;
};

/// Raw relevance = number of content tokens shared by query and item.
class OverlapRelevanceBackend final : public RelevanceBackend {
 public:
  double score_pair(std::string_view query, std::string_view item) const override;
  std::string name() const override { return "stub-overlap-relevance"; }
};

class LookupNliBackend final : public NliBackend {
 public:
  explicit LookupNliBackend(LookupTable table) : table_(std::move(table)) {}
  double entail(std::string_view source, std::string_view claim) const override;
  std::string name() const override { return "stub-lookup-nli"; }

 private:
  LookupTable table_;
};

/// Support = fraction of the claim's content tokens found in the source.
class OverlapNliBackend final : public NliBackend {
 public:
  double entail(std::string_view source, std::string_view claim) const override;
  std::string name() const override { return "stub-overlap-nli"; }
};

/// Signed feature hashing of content tokens (FNV-1a) into `dimension` buckets.
class HashedEmbeddingBackend final : public EmbeddingBackend {
 public:
  explicit HashedEmbeddingBackend(Eigen::Index dimension = 64, bool unit_norm = false);
  Eigen::MatrixXd embed(const std::vector<std::string>& texts) const override;
  std::string name() const override { return unit_norm_ ? "stub-hash-embedding-unit" : "stub-hash-embedding"; }

 private:
  Eigen::Index dimension_;
  bool unit_norm_;
};

/// Adapters over plain callables, mostly for tests.
class FunctionRelevanceBackend final : public RelevanceBackend {
 public:
  using Fn = std::function<double(std::string_view, std::string_view)>;
  explicit FunctionRelevanceBackend(Fn fn, std::string name = "function-relevance")
      : fn_(std::move(fn)), name_(std::move(name)) {}
  double score_pair(std::string_view query, std::string_view item) const override { return fn_(query, item); }
  std::string name() const override { return name_; }

 private:
  Fn fn_;
  std::string name_;
};

class FunctionNliBackend final : public NliBackend {
 public:
  using Fn = std::function<double(std::string_view, std::string_view)>;
  explicit FunctionNliBackend(Fn fn, std::string name = "function-nli")
      : fn_(std::move(fn)), name_(std::move(name)) {}
  double entail(std::string_view source, std::string_view claim) const override { return fn_(source, claim); }
  std::string name() const override { return name_; }

 private:
  Fn fn_;
  std::string name_;
};

}  // namespace provenance
