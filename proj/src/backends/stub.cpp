#include "provenance/backends/stub.hpp"

#include <algorithm>
#include <iterator>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <unordered_set>

#include "provenance/error.hpp"

namespace provenance {

namespace {

constexpr std::string_view kStopwords[] = {
    "a",     "an",    "and",   "are",  "as",    "at",    "be",    "been",  "but",   "by",
    "can",   "could", "did",   "do",   "does",  "for",   "from",  "had",   "has",   "have",
    "he",    "her",   "his",   "how",  "i",     "if",    "in",    "into",  "is",    "it",
    "its",   "of",    "on",    "or",   "our",   "she",   "so",    "that",  "the",   "their",
    "them",  "then",  "there", "they", "this",  "to",    "was",   "we",    "were",  "what",
    "when",  "where", "which", "who",  "whom",  "why",   "will",  "with",  "would", "you",
    "your",  "not",   "no",    "than", "these", "those", "also",  "any",   "all",   "answer",
    "question", "s",
};

bool is_stopword(std::string_view word) {
  return std::find(std::begin(kStopwords), std::end(kStopwords), word) != std::end(kStopwords);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::size_t shared_count(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const std::unordered_set<std::string> lookup(b.begin(), b.end());
  return static_cast<std::size_t>(
      std::count_if(a.begin(), a.end(), [&](const std::string& t) { return lookup.contains(t); }));
}

}  // namespace

std::vector<std::string> content_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::unordered_set<std::string> seen;
  std::string current;
  const auto flush = [&] {
    if (!current.empty() && !is_stopword(current) && seen.insert(current).second) {
      tokens.push_back(current);
    }
    current.clear();
  };
  for (const char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      current.push_back(static_cast<char>(std::tolower(u)));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

LookupTable LookupTable::from_json(const nlohmann::json& table) {
  if (!table.is_object()) throw Error(ErrorCode::ConfigError, "lookup table must be a JSON object");
  LookupTable out;
  if (const auto it = table.find("items"); it != table.end()) {
    if (!it->is_object()) throw Error(ErrorCode::ConfigError, "lookup table: items must be an object");
    for (const auto& [text, score] : it->items()) {
      if (!score.is_number()) throw Error(ErrorCode::ConfigError, "lookup table: non-numeric score");
      out.items.emplace(text, score.get<double>());
    }
  }
  if (const auto it = table.find("pairs"); it != table.end()) {
    if (!it->is_array()) throw Error(ErrorCode::ConfigError, "lookup table: pairs must be an array");
    for (const auto& entry : *it) {
      if (!entry.is_object() || !entry.contains("key") || !entry.contains("text") ||
          !entry.contains("score") || !entry["score"].is_number()) {
        throw Error(ErrorCode::ConfigError, "lookup table: pair entries need key, text and score");
      }
      out.pairs.emplace(std::pair{entry["key"].get<std::string>(), entry["text"].get<std::string>()},
                        entry["score"].get<double>());
    }
  }
  if (const auto it = table.find("default"); it != table.end() && !it->is_null()) {
    if (!it->is_number()) throw Error(ErrorCode::ConfigError, "lookup table: default must be a number");
    out.fallback = it->get<double>();
  }
  return out;
}

LookupTable LookupTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open lookup table " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
}

double LookupTable::find(std::string_view key, std::string_view text) const {
  if (!pairs.empty()) {
    if (const auto it = pairs.find({std::string(key), std::string(text)}); it != pairs.end()) {
      return it->second;
    }
  }
  if (const auto it = items.find(text); it != items.end()) return it->second;
  if (fallback) return *fallback;
  throw Error(ErrorCode::BackendFailure, "lookup table has no entry for \"" + std::string(text) + "\"");
}

double LookupRelevanceBackend::score_pair(std::string_view query, std::string_view item) const {
  return table_.find(query, item);
}

double OverlapRelevanceBackend::score_pair(std::string_view query, std::string_view item) const {
  return static_cast<double>(shared_count(content_tokens(query), content_tokens(item)));
}

double LookupNliBackend::entail(std::string_view source, std::string_view claim) const {
  return table_.find(claim, source);
}

double OverlapNliBackend::entail(std::string_view source, std::string_view claim) const {
  const auto claim_tokens = content_tokens(claim);
  if (claim_tokens.empty()) return 0.0;
  return static_cast<double>(shared_count(claim_tokens, content_tokens(source))) /
         static_cast<double>(claim_tokens.size());
}

HashedEmbeddingBackend::HashedEmbeddingBackend(Eigen::Index dimension, bool unit_norm)
    : dimension_(dimension), unit_norm_(unit_norm) {
  if (dimension_ < 1) throw Error(ErrorCode::InvalidParameter, "embedding dimension must be >= 1");
}

Eigen::MatrixXd HashedEmbeddingBackend::embed(const std::vector<std::string>& texts) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(texts.size()), dimension_);
  for (std::size_t r = 0; r < texts.size(); ++r) {
    auto row = out.row(static_cast<Eigen::Index>(r));
    for (const auto& token : content_tokens(texts[r])) {
      const auto hash = fnv1a(token);
      const auto bucket = static_cast<Eigen::Index>(hash % static_cast<std::uint64_t>(dimension_));
      row[bucket] += ((hash >> 32) & 1U) ? -1.0 : 1.0;
    }
    // Texts without content tokens (or whose hashes cancel) get a fixed
    // non-zero vector so cosine similarity stays defined.
    if (row.isZero()) row[0] = 1.0;
    if (unit_norm_) row /= row.norm();
  }
  return out;
}

}  // namespace provenance
