#include "provenance/domain.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "provenance/error.hpp"

namespace provenance {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t count = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

void check_template(std::string_view tmpl) {
  const auto queries = count_occurrences(tmpl, kQueryPlaceholder);
  const auto answers = count_occurrences(tmpl, kAnswerPlaceholder);
  if (queries != 1 || answers != 1) {
    throw Error(ErrorCode::MalformedTemplate,
                "template needs {query} and {answer} exactly once each, found " +
                    std::to_string(queries) + " and " + std::to_string(answers));
  }
}

constexpr std::array<std::string_view, 12> kAbbreviations = {
    "mr.", "mrs.", "ms.", "dr.", "prof.", "st.", "jr.", "sr.", "e.g.", "i.e.", "etc.", "vs.",
};

bool is_abbreviation(std::string_view word) {
  std::string lowered(word);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), lowered) != kAbbreviations.end();
}

}  // namespace

std::string_view to_string(SelectionStrategy strategy) {
  return strategy == SelectionStrategy::TopK ? "topk" : "topp";
}

std::string_view to_string(Aggregation method) {
  switch (method) {
    case Aggregation::Min: return "min";
    case Aggregation::Max: return "max";
    case Aggregation::WeightedAverage: return "weighted_average";
  }
  return "max";
}

std::string_view to_string(Similarity similarity) {
  return similarity == Similarity::Dot ? "dot" : "cosine";
}

Similarity parse_similarity(std::string_view text) {
  if (text == "dot" || text == "Dot") return Similarity::Dot;
  if (text == "cosine" || text == "Cosine") return Similarity::Cosine;
  throw Error(ErrorCode::InvalidParameter, "unknown similarity '" + std::string(text) + "'");
}

SelectionStrategy parse_strategy(std::string_view text) {
  if (text == "topk" || text == "top_k" || text == "TopK") return SelectionStrategy::TopK;
  if (text == "topp" || text == "top_p" || text == "TopP") return SelectionStrategy::TopP;
  throw Error(ErrorCode::InvalidParameter, "unknown selection strategy '" + std::string(text) + "'");
}

Aggregation parse_aggregation(std::string_view text) {
  if (text == "min" || text == "Min") return Aggregation::Min;
  if (text == "max" || text == "Max") return Aggregation::Max;
  if (text == "weighted_average" || text == "weighted-average" || text == "wavg" ||
      text == "WeightedAverage") {
    return Aggregation::WeightedAverage;
  }
  throw Error(ErrorCode::InvalidParameter, "unknown aggregation '" + std::string(text) + "'");
}

std::string trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && is_space(text[begin])) ++begin;
  while (end > begin && is_space(text[end - 1])) --end;
  return std::string(text.substr(begin, end - begin));
}

CheckInput CheckInput::from_sources(std::string_view query, std::string_view answer,
                                    const std::vector<std::string>& sources) {
  CheckInput input{trim(query), trim(answer), {}};
  input.contexts.reserve(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    input.contexts.push_back({trim(sources[i]), i});
  }
  return input;
}

void CheckInput::validate() const {
  if (trim(query).empty()) throw Error(ErrorCode::EmptyField, "query");
  if (trim(answer).empty()) throw Error(ErrorCode::EmptyField, "answer");
  if (contexts.empty()) throw Error(ErrorCode::EmptyInput, "contexts");
  std::vector<bool> seen(contexts.size(), false);
  for (const auto& item : contexts) {
    if (trim(item.text).empty()) {
      throw Error(ErrorCode::EmptyField, "context " + std::to_string(item.index));
    }
    if (item.index >= contexts.size() || seen[item.index]) {
      throw Error(ErrorCode::ValidationError,
                  "context indices must be a permutation of 0..n-1 (bad index " +
                      std::to_string(item.index) + ")");
    }
    seen[item.index] = true;
  }
}

void PipelineConfig::validate() const {
  if (top_k < 1) throw Error(ErrorCode::InvalidParameter, "top_k must be >= 1");
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "top_p must lie in (0, 1]");
  }
  if (threshold && !(*threshold >= 0.0 && *threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "threshold must lie in [0, 1]");
  }
  check_template(claim_template);
}

std::string template_id(std::string_view tmpl) {
  if (tmpl == kDefaultClaimTemplate) return "default";
  if (tmpl == kShortClaimTemplate) return "short";
  return "custom";
}

ClaimPrompt build_claim(std::string_view query, std::string_view answer, std::string_view tmpl) {
  if (query.empty()) throw Error(ErrorCode::EmptyField, "query");
  if (answer.empty()) throw Error(ErrorCode::EmptyField, "answer");
  check_template(tmpl);

  // Positions come from the template alone, so placeholder-like text inside
  // the query or answer is never substituted a second time.
  const auto qpos = tmpl.find(kQueryPlaceholder);
  const auto apos = tmpl.find(kAnswerPlaceholder);
  const bool query_first = qpos < apos;
  const auto first_pos = query_first ? qpos : apos;
  const auto first_len = query_first ? kQueryPlaceholder.size() : kAnswerPlaceholder.size();
  const auto second_pos = query_first ? apos : qpos;
  const auto second_len = query_first ? kAnswerPlaceholder.size() : kQueryPlaceholder.size();

  std::string text;
  text.reserve(tmpl.size() + query.size() + answer.size());
  text.append(tmpl.substr(0, first_pos));
  text.append(query_first ? query : answer);
  text.append(tmpl.substr(first_pos + first_len, second_pos - first_pos - first_len));
  text.append(query_first ? answer : query);
  text.append(tmpl.substr(second_pos + second_len));
  return {std::move(text), template_id(tmpl)};
}

std::vector<ContextItem> split_sentences(std::string_view paragraph) {
  std::vector<ContextItem> sentences;
  const auto push = [&](std::string_view piece) {
    auto text = trim(piece);
    if (!text.empty()) sentences.push_back({std::move(text), sentences.size()});
  };

  const std::size_t n = paragraph.size();
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < n) {
    if (!is_terminator(paragraph[i])) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < n && is_terminator(paragraph[end])) ++end;
    while (end < n && is_closer(paragraph[end])) ++end;

    bool boundary = false;
    if (end == n) {
      boundary = true;
    } else if (is_space(paragraph[end])) {
      std::size_t next = end;
      while (next < n && is_space(paragraph[next])) ++next;
      const auto c = next < n ? static_cast<unsigned char>(paragraph[next]) : 0;
      boundary = next == n || std::isupper(c) || std::isdigit(c);
    }

    if (boundary && paragraph[i] == '.' && end == i + 1) {
      std::size_t word_start = i;
      while (word_start > start && !is_space(paragraph[word_start - 1])) --word_start;
      if (is_abbreviation(paragraph.substr(word_start, end - word_start))) boundary = false;
    }

    if (boundary) {
      push(paragraph.substr(start, end - start));
      start = end;
    }
    i = end;
  }
  push(paragraph.substr(start));
  return sentences;
}

}  // namespace provenance
