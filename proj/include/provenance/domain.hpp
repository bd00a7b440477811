#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace provenance {

/// Claim template wording used when none is configured.
inline constexpr std::string_view kDefaultClaimTemplate =
    "The answer to the question {query} is {answer}.";
/// Shorter variant without the article before "question".
inline constexpr std::string_view kShortClaimTemplate = "The answer to question {query} is {answer}.";

inline constexpr std::string_view kQueryPlaceholder = "{query}";
inline constexpr std::string_view kAnswerPlaceholder = "{answer}";

/// One retrieved chunk. `index` is its original position in the retrieved list.
struct ContextItem {
  std::string text;
  std::size_t index = 0;

  friend bool operator==(const ContextItem&, const ContextItem&) = default;
};

struct CheckInput {
  std::string query;
  std::string answer;
  std::vector<ContextItem> contexts;

  /// Trims every field and numbers the sources 0..n-1 in list order.
  static CheckInput from_sources(std::string_view query, std::string_view answer,
                                 const std::vector<std::string>& sources);

  /// Throws EmptyField / EmptyInput / ValidationError on a broken invariant.
  void validate() const;
};

struct ClaimPrompt {
  std::string text;
  std::string template_id;
};

enum class SelectionStrategy { TopK, TopP };
enum class Aggregation { Min, Max, WeightedAverage };
enum class Similarity { Dot, Cosine };

std::string_view to_string(SelectionStrategy strategy);
std::string_view to_string(Aggregation method);
std::string_view to_string(Similarity similarity);
SelectionStrategy parse_strategy(std::string_view text);
Aggregation parse_aggregation(std::string_view text);
Similarity parse_similarity(std::string_view text);

struct PipelineConfig {
  SelectionStrategy selection_strategy = SelectionStrategy::TopP;
  std::size_t top_k = 5;
  double top_p = 0.9;
  Aggregation aggregation = Aggregation::Max;
  std::optional<double> threshold;
  bool temporal_ordering = true;
  std::string claim_template{kDefaultClaimTemplate};

  void validate() const;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

std::string trim(std::string_view text);

/// Substitutes query and answer into `tmpl` verbatim.
ClaimPrompt build_claim(std::string_view query, std::string_view answer,
                        std::string_view tmpl = kDefaultClaimTemplate);

/// Identifier recorded alongside a claim: "default", "short", or "custom".
std::string template_id(std::string_view tmpl);

/// Rule-based sentence splitter.
///
/// A sentence ends at a run of '.', '!' or '?' that is followed by whitespace
/// and then an uppercase ASCII letter, a digit, or the end of the text. A
/// period closing a known abbreviation ("Mr.", "Dr.", "e.g.", "i.e.", "etc.",
/// "vs.", ...) never ends a sentence. Returned items are trimmed, non-empty and
/// numbered 0..m-1.
std::vector<ContextItem> split_sentences(std::string_view paragraph);

using SentenceSplitter = std::function<std::vector<ContextItem>(std::string_view)>;

}  // namespace provenance
