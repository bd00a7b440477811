#include "provenance/backends/wordpiece.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "provenance/error.hpp"

namespace provenance {

namespace {

bool is_ascii_punct(unsigned char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) || (c >= 123 && c <= 126);
}

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

/// Length of the UTF-8 sequence starting with `lead` (1 for invalid bytes).
std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

}  // namespace

WordPieceTokenizer WordPieceTokenizer::load(const std::filesystem::path& vocab_file, Options options) {
  std::ifstream in(vocab_file);
  if (!in) throw Error(ErrorCode::ModelFormat, "cannot open vocabulary " + vocab_file.string());
  std::vector<std::string> vocab;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    vocab.push_back(line);
  }
  return WordPieceTokenizer(std::move(vocab), std::move(options));
}

WordPieceTokenizer::WordPieceTokenizer(std::vector<std::string> vocab, Options options)
    : vocab_(std::move(vocab)), options_(std::move(options)) {
  for (std::size_t i = 0; i < vocab_.size(); ++i) ids_.emplace(vocab_[i], static_cast<std::int32_t>(i));
  for (const auto* special : {&options_.unk_token, &options_.cls_token, &options_.sep_token}) {
    if (!ids_.contains(*special)) throw Error(ErrorCode::ModelFormat, "vocabulary lacks " + *special);
  }
}

std::vector<std::string> WordPieceTokenizer::basic_split(std::string_view text) const {
  std::vector<std::string> words;
  std::string current;
  const auto flush = [&] {
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < text.size();) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c < 0x80) {
      ++i;
      if (is_space(c)) {
        flush();
      } else if (is_ascii_punct(c)) {
        flush();
        words.emplace_back(1, static_cast<char>(c));
      } else if (c >= 0x20 && c != 0x7F) {
        current.push_back(options_.lowercase ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
      }
      continue;
    }
    const auto n = std::min(utf8_length(c), text.size() - i);
    current.append(text.substr(i, n));
    i += n;
  }
  flush();
  return words;
}

void WordPieceTokenizer::wordpiece(const std::string& word, std::vector<std::string>& out) const {
  if (word.size() > options_.max_chars_per_word) {
    out.push_back(options_.unk_token);
    return;
  }
  std::vector<std::string> pieces;
  std::size_t start = 0;
  while (start < word.size()) {
    std::size_t end = word.size();
    std::string match;
    while (end > start) {
      std::string candidate = word.substr(start, end - start);
      if (start > 0) candidate = options_.continuation_prefix + candidate;
      if (ids_.contains(candidate)) {
        match = std::move(candidate);
        break;
      }
      // Step back a whole UTF-8 character.
      do {
        --end;
      } while (end > start && (static_cast<unsigned char>(word[end]) & 0xC0) == 0x80);
    }
    if (match.empty()) {
      out.push_back(options_.unk_token);
      return;
    }
    pieces.push_back(std::move(match));
    start = end;
  }
  out.insert(out.end(), pieces.begin(), pieces.end());
}

std::vector<std::string> WordPieceTokenizer::tokenize(std::string_view text) const {
  std::vector<std::string> tokens;
  for (const auto& word : basic_split(text)) wordpiece(word, tokens);
  return tokens;
}

std::int32_t WordPieceTokenizer::id_of(const std::string& token) const {
  const auto it = ids_.find(token);
  return it == ids_.end() ? ids_.at(options_.unk_token) : it->second;
}

std::vector<std::int32_t> WordPieceTokenizer::to_ids(const std::vector<std::string>& tokens) const {
  std::vector<std::int32_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id_of(t));
  return out;
}

Encoding WordPieceTokenizer::encode(std::string_view text, std::size_t max_length) const {
  if (max_length < 3) throw Error(ErrorCode::InvalidParameter, "max sequence length must be >= 3");
  auto tokens = tokenize(text);
  Encoding enc;
  if (tokens.size() > max_length - 2) {
    tokens.resize(max_length - 2);
    enc.truncated = true;
  }
  enc.ids.push_back(id_of(options_.cls_token));
  const auto body = to_ids(tokens);
  enc.ids.insert(enc.ids.end(), body.begin(), body.end());
  enc.ids.push_back(id_of(options_.sep_token));
  enc.type_ids.assign(enc.ids.size(), 0);
  return enc;
}

Encoding WordPieceTokenizer::encode_pair(std::string_view first, std::string_view second,
                                         std::size_t max_length) const {
  if (max_length < 5) throw Error(ErrorCode::InvalidParameter, "max sequence length must be >= 5");
  auto a = tokenize(first);
  auto b = tokenize(second);
  Encoding enc;
  while (a.size() + b.size() > max_length - 3) {
    auto& longer = a.size() > b.size() ? a : b;
    longer.pop_back();
    enc.truncated = true;
  }
  const auto cls = id_of(options_.cls_token);
  const auto sep = id_of(options_.sep_token);
  enc.ids.push_back(cls);
  for (const auto id : to_ids(a)) enc.ids.push_back(id);
  enc.ids.push_back(sep);
  enc.type_ids.assign(enc.ids.size(), 0);
  for (const auto id : to_ids(b)) enc.ids.push_back(id);
  enc.ids.push_back(sep);
  enc.type_ids.resize(enc.ids.size(), 1);
  return enc;
}

}  // namespace provenance
