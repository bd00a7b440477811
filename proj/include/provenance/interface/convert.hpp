#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "provenance/evaluation.hpp"

namespace provenance {

/// RFC 4180 rows: comma separated, double-quoted fields may hold commas,
/// newlines and "" escapes. CRLF and LF line endings are both accepted.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

struct ConvertOptions {
  /// Query used for corpora without one (TRUE subsets, HaluEval summarization).
  std::string default_query = "What does the source state?";
};

/// Mappings from public corpora to triplet records:
///
///   halueval-qa            {knowledge, question, right_answer, hallucinated_answer} -> 2 records
///   halueval-dialogue      {knowledge, dialogue_history, right_response, hallucinated_response} -> 2 records
///   halueval-summarization {document, right_summary, hallucinated_summary} -> 2 records
///   halubench              {id, passage, question, answer, label: PASS|FAIL}
///   true                   CSV with grounding, generated_text, label columns
///   hotpotqa               {_id, question, answer, context: [[title, [sentences]]], hallucinated_answer?}
///   msmarco                {query_id, query, answers, passages, hallucinated_answer?}
///
/// JSON inputs may be a single array or one object per line. Sources are kept
/// as paragraphs; evaluation can split them into sentences.
std::vector<EvalRecord> convert_corpus(std::string_view format, std::string_view text,
                                       const ConvertOptions& options = {});

std::vector<std::string> converter_names();

}  // namespace provenance
