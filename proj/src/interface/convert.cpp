#include "provenance/interface/convert.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

#include "provenance/error.hpp"

namespace provenance {

using json = nlohmann::json;

namespace {

std::vector<json> json_rows(std::string_view text) {
  std::vector<json> rows;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return rows;
  if (text[first] == '[') {
    try {
      for (auto& row : json::parse(text)) rows.push_back(std::move(row));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ParseError, e.what());
    }
    return rows;
  }
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find('\n', start), text.size());
    ++line_no;
    const auto line = text.substr(start, end - start);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      try {
        rows.push_back(json::parse(line));
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    start = end + 1;
  }
  return rows;
}

std::string text_of(const json& row, const char* field, std::size_t n) {
  const auto it = row.find(field);
  if (it == row.end() || !it->is_string()) {
    throw Error(ErrorCode::ValidationError, std::string(field) + " (row " + std::to_string(n) + ")");
  }
  return it->get<std::string>();
}

std::string id_of(const json& row, const char* field, std::size_t n) {
  const auto it = row.find(field);
  if (it == row.end()) return std::to_string(n);
  return it->is_string() ? it->get<std::string>() : it->dump();
}

void pair_records(std::vector<EvalRecord>& out, const std::string& id, const std::string& query,
                  const std::vector<std::string>& sources, const std::string& right, const std::string& wrong) {
  out.push_back({id + "-right", query, right, sources, 1});
  out.push_back({id + "-hallucinated", query, wrong, sources, 0});
}

std::vector<EvalRecord> halueval(std::string_view text, const char* context, const char* query_field,
                                 const char* right, const char* wrong, const std::string& default_query) {
  std::vector<EvalRecord> out;
  const auto rows = json_rows(text);
  for (std::size_t n = 0; n < rows.size(); ++n) {
    const auto& row = rows[n];
    const auto query = query_field ? text_of(row, query_field, n) : default_query;
    pair_records(out, std::to_string(n), query, {text_of(row, context, n)}, text_of(row, right, n),
                 text_of(row, wrong, n));
  }
  return out;
}

std::vector<EvalRecord> halubench(std::string_view text) {
  std::vector<EvalRecord> out;
  const auto rows = json_rows(text);
  for (std::size_t n = 0; n < rows.size(); ++n) {
    const auto& row = rows[n];
    const auto label = text_of(row, "label", n);
    if (label != "PASS" && label != "FAIL") {
      throw Error(ErrorCode::ValidationError, "label (row " + std::to_string(n) + ": expected PASS or FAIL)");
    }
    out.push_back({id_of(row, "id", n), text_of(row, "question", n), text_of(row, "answer", n),
                   {text_of(row, "passage", n)}, label == "PASS" ? 1 : 0});
  }
  return out;
}

std::vector<EvalRecord> true_csv(std::string_view text, const std::string& query) {
  const auto rows = parse_csv(text);
  if (rows.empty()) return {};
  const auto& header = rows.front();
  const auto column = [&](const char* name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::ValidationError, std::string(name) + " (missing CSV column)");
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto grounding = column("grounding");
  const auto generated = column("generated_text");
  const auto label = column("label");
  std::vector<EvalRecord> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != header.size()) {
      throw Error(ErrorCode::ParseError, "CSV row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                                             " fields, header has " + std::to_string(header.size()));
    }
    if (row[label] != "0" && row[label] != "1") {
      throw Error(ErrorCode::ValidationError, "label (CSV row " + std::to_string(r) + ": expected 0 or 1)");
    }
    out.push_back({std::to_string(r - 1), query, row[generated], {row[grounding]}, row[label] == "1" ? 1 : 0});
  }
  return out;
}

std::vector<EvalRecord> hotpotqa(std::string_view text) {
  std::vector<EvalRecord> out;
  const auto rows = json_rows(text);
  for (std::size_t n = 0; n < rows.size(); ++n) {
    const auto& row = rows[n];
    std::vector<std::string> sources;
    for (const auto& entry : row.value("context", json::array())) {
      if (!entry.is_array() || entry.size() != 2 || !entry[1].is_array()) {
        throw Error(ErrorCode::ValidationError, "context (row " + std::to_string(n) + ": expected [title, [sentences]])");
      }
      std::string paragraph;
      for (const auto& sentence : entry[1]) {
        if (!paragraph.empty() && paragraph.back() != ' ') paragraph += ' ';
        paragraph += sentence.get<std::string>();
      }
      sources.push_back(paragraph);
    }
    const auto id = id_of(row, "_id", n);
    const auto query = text_of(row, "question", n);
    out.push_back({id, query, text_of(row, "answer", n), sources, 1});
    if (row.contains("hallucinated_answer")) {
      out.push_back({id + "-hallucinated", query, text_of(row, "hallucinated_answer", n), sources, 0});
    }
  }
  return out;
}

std::vector<EvalRecord> msmarco(std::string_view text) {
  std::vector<EvalRecord> out;
  const auto rows = json_rows(text);
  for (std::size_t n = 0; n < rows.size(); ++n) {
    const auto& row = rows[n];
    std::vector<std::string> sources;
    const auto& passages = row.at("passages");
    if (passages.is_object()) {
      for (const auto& p : passages.at("passage_text")) sources.push_back(p.get<std::string>());
    } else {
      for (const auto& p : passages) sources.push_back(p.at("passage_text").get<std::string>());
    }
    std::string answer;
    for (const auto& a : row.value("answers", json::array())) {
      if (a.is_string() && a.get<std::string>() != "No Answer Present.") {
        answer = a.get<std::string>();
        break;
      }
    }
    if (answer.empty()) continue;
    const auto id = id_of(row, "query_id", n);
    const auto query = text_of(row, "query", n);
    out.push_back({id, query, answer, sources, 1});
    if (row.contains("hallucinated_answer")) {
      out.push_back({id + "-hallucinated", query, text_of(row, "hallucinated_answer", n), sources, 0});
    }
  }
  return out;
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    any = true;
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      field.push_back(c);
    }
  }
  if (quoted) throw Error(ErrorCode::ParseError, "CSV ends inside a quoted field");
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<EvalRecord> convert_corpus(std::string_view format, std::string_view text, const ConvertOptions& options) {
  try {
    if (format == "halueval-qa") return halueval(text, "knowledge", "question", "right_answer", "hallucinated_answer", {});
    if (format == "halueval-dialogue") {
      return halueval(text, "knowledge", "dialogue_history", "right_response", "hallucinated_response", {});
    }
    if (format == "halueval-summarization") {
      return halueval(text, "document", nullptr, "right_summary", "hallucinated_summary", options.default_query);
    }
    if (format == "halubench") return halubench(text);
    if (format == "true") return true_csv(text, options.default_query);
    if (format == "hotpotqa") return hotpotqa(text);
    if (format == "msmarco") return msmarco(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ValidationError, std::string(format) + ": " + e.what());
  }
  throw Error(ErrorCode::ConfigError, "unknown corpus format \"" + std::string(format) + "\"");
}

std::vector<std::string> converter_names() {
  return {"halueval-qa", "halueval-dialogue", "halueval-summarization", "halubench", "true", "hotpotqa", "msmarco"};
}

}  // namespace provenance
