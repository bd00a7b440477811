#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace provenance {

/// Token ids and segment ids for one encoder input.
struct Encoding {
  std::vector<std::int32_t> ids;
  std::vector<std::int32_t> type_ids;
  bool truncated = false;
};

/// BERT-style tokenizer: basic whitespace/punctuation split, optional ASCII
/// lowercasing, then greedy longest-match WordPiece with "##" continuations.
class WordPieceTokenizer {
 public:
  struct Options {
    bool lowercase = true;
    std::string unk_token = "[UNK]";
    std::string cls_token = "[CLS]";
    std::string sep_token = "[SEP]";
    std::string continuation_prefix = "##";
    std::size_t max_chars_per_word = 100;
  };

  /// One token per line; the line number is the id.
  static WordPieceTokenizer load(const std::filesystem::path& vocab_file, Options options);
  WordPieceTokenizer(std::vector<std::string> vocab, Options options);

  std::vector<std::string> tokenize(std::string_view text) const;
  std::vector<std::int32_t> to_ids(const std::vector<std::string>& tokens) const;

  /// [CLS] text [SEP], truncated to max_length.
  Encoding encode(std::string_view text, std::size_t max_length) const;
  /// [CLS] first [SEP] second [SEP]; the longer side loses tokens first.
  Encoding encode_pair(std::string_view first, std::string_view second, std::size_t max_length) const;

  std::size_t vocab_size() const { return vocab_.size(); }

 private:
  std::vector<std::string> basic_split(std::string_view text) const;
  void wordpiece(const std::string& word, std::vector<std::string>& out) const;
  std::int32_t id_of(const std::string& token) const;

  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::int32_t> ids_;
  Options options_;
};

}  // namespace provenance
