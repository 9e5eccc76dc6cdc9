#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "factgym/domain.hpp"

namespace factgym::text {

// Lowercased tokens, never empty. Only tokenize() builds one.
class TokenSeq {
 public:
  TokenSeq() = default;

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  const std::string& operator[](std::size_t i) const { return tokens_[i]; }

  bool operator==(const TokenSeq&) const = default;

 private:
  friend TokenSeq tokenize(std::string_view text);
  explicit TokenSeq(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {}
  std::vector<std::string> tokens_;
};

/// Splits a response into its <think> and <answer> blocks.
///
/// Accepts exactly one `<think>...</think>` followed, after optional
/// whitespace, by exactly one `<answer>...</answer>`. Only whitespace may
/// surround the two blocks. Anything else yields well_formed=false with no
/// extracted parts; malformed input is never an error.
Response parse_response(std::string_view raw);

// Unicode scalar values of a UTF-8 string. Each maximal ill-formed
// subsequence decodes to one U+FFFD.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view text);

// Unit-cost Levenshtein distance over Unicode scalar values.
std::size_t edit_distance(std::string_view a, std::string_view b);

// 1 - d/max(|a|,|b|), lengths in scalar values; 1 when both are empty.
double normalized_edit_similarity(std::string_view a, std::string_view b);

/// Lowercases ASCII letters, splits on Unicode whitespace, and strips ASCII
/// punctuation from both ends of each token. Non-ASCII punctuation such as
/// an em-dash is kept.
TokenSeq tokenize(std::string_view text);

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b);

// ROUGE-L F1 (beta = 1). Zero when either side tokenizes empty.
double rouge_l(std::string_view candidate, std::string_view reference);

// Whether `needle` occurs as a contiguous run inside `haystack`.
bool contains_token_run(const TokenSeq& haystack, const TokenSeq& needle);

}  // namespace factgym::text
