#include "factgym/textmetrics.hpp"

#include <algorithm>

namespace factgym::text {

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

constexpr char32_t kReplacement = 0xFFFD;

bool only_ascii_space(std::string_view s) {
  return s.find_first_not_of(" \t\n\r\f\v") == std::string_view::npos;
}

// Position of the single occurrence of `tag`, or npos if it is absent or
// repeated.
std::size_t find_unique(std::string_view raw, std::string_view tag) {
  const auto first = raw.find(tag);
  if (first == std::string_view::npos) return first;
  if (raw.find(tag, first + 1) != std::string_view::npos) return std::string_view::npos;
  return first;
}

bool is_unicode_space(char32_t c) {
  switch (c) {
    case U'\t': case U'\n': case 0x0B: case 0x0C: case U'\r': case U' ':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool is_ascii_punct(char32_t c) {
  return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
         (c >= 0x7B && c <= 0x7E);
}

}  // namespace

Response parse_response(std::string_view raw) {
  Response r;
  r.raw = std::string(raw);

  const auto t_open = find_unique(raw, kThinkOpen);
  const auto t_close = find_unique(raw, kThinkClose);
  const auto a_open = find_unique(raw, kAnswerOpen);
  const auto a_close = find_unique(raw, kAnswerClose);
  constexpr auto npos = std::string_view::npos;
  if (t_open == npos || t_close == npos || a_open == npos || a_close == npos) return r;

  const auto think_begin = t_open + kThinkOpen.size();
  const auto think_end_tag = t_close + kThinkClose.size();
  const auto answer_begin = a_open + kAnswerOpen.size();
  const auto answer_end_tag = a_close + kAnswerClose.size();
  if (t_close < think_begin || a_open < think_end_tag || a_close < answer_begin) return r;

  if (!only_ascii_space(raw.substr(0, t_open)) ||
      !only_ascii_space(raw.substr(think_end_tag, a_open - think_end_tag)) ||
      !only_ascii_space(raw.substr(answer_end_tag))) {
    return r;
  }

  r.well_formed = true;
  r.think_span = std::string(raw.substr(think_begin, t_close - think_begin));
  r.answer_text = std::string(raw.substr(answer_begin, a_close - answer_begin));
  r.parsed_label = parse_label(*r.answer_text);
  return r;
}

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    if (lead < 0x80) {
      out.push_back(lead);
      ++i;
      continue;
    }
    std::size_t extra = 0;
    char32_t cp = 0;
    unsigned char lo = 0x80, hi = 0xBF;  // valid range of the second byte
    if (lead >= 0xC2 && lead <= 0xDF) {
      extra = 1;
      cp = lead & 0x1F;
    } else if (lead >= 0xE0 && lead <= 0xEF) {
      extra = 2;
      cp = lead & 0x0F;
      if (lead == 0xE0) lo = 0xA0;
      if (lead == 0xED) hi = 0x9F;
    } else if (lead >= 0xF0 && lead <= 0xF4) {
      extra = 3;
      cp = lead & 0x07;
      if (lead == 0xF0) lo = 0x90;
      if (lead == 0xF4) hi = 0x8F;
    } else {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    // One U+FFFD per maximal ill-formed prefix.
    std::size_t k = 1;
    for (; k <= extra && i + k < text.size(); ++k) {
      const auto cont = static_cast<unsigned char>(text[i + k]);
      const bool valid = k == 1 ? (cont >= lo && cont <= hi) : (cont & 0xC0) == 0x80;
      if (!valid) break;
      cp = (cp << 6) | (cont & 0x3F);
    }
    if (k <= extra) {
      out.push_back(kReplacement);
      i += k;
      continue;
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

std::string encode_utf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t c : text) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (c >> 12)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (c >> 18)));
      out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

namespace {

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  // Two rows over the shorter string.
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

std::size_t edit_distance(std::string_view a, std::string_view b) {
  return levenshtein(decode_utf8(a), decode_utf8(b));
}

double normalized_edit_similarity(std::string_view a, std::string_view b) {
  const auto ua = decode_utf8(a);
  const auto ub = decode_utf8(b);
  const auto longest = std::max(ua.size(), ub.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(ua, ub)) / static_cast<double>(longest);
}

TokenSeq tokenize(std::string_view text) {
  const auto cps = decode_utf8(text);
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < cps.size()) {
    while (i < cps.size() && is_unicode_space(cps[i])) ++i;
    std::size_t j = i;
    while (j < cps.size() && !is_unicode_space(cps[j])) ++j;
    std::size_t begin = i, end = j;
    while (begin < end && is_ascii_punct(cps[begin])) ++begin;
    while (end > begin && is_ascii_punct(cps[end - 1])) --end;
    if (begin < end) {
      std::u32string token(cps.begin() + static_cast<std::ptrdiff_t>(begin),
                           cps.begin() + static_cast<std::ptrdiff_t>(end));
      for (char32_t& c : token) {
        if (c >= U'A' && c <= U'Z') c = c - U'A' + U'a';
      }
      tokens.push_back(encode_utf8(token));
    }
    i = j;
  }
  return TokenSeq(std::move(tokens));
}

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  const auto& x = a.tokens();
  const auto& y = b.tokens();
  std::vector<std::size_t> prev(y.size() + 1, 0), cur(y.size() + 1, 0);
  for (std::size_t i = 1; i <= x.size(); ++i) {
    for (std::size_t j = 1; j <= y.size(); ++j) {
      cur[j] = x[i - 1] == y[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[y.size()];
}

double rouge_l(std::string_view candidate, std::string_view reference) {
  const auto cand = tokenize(candidate);
  const auto ref = tokenize(reference);
  if (cand.empty() || ref.empty()) return 0.0;
  const auto lcs = lcs_length(cand, ref);
  if (lcs == 0) return 0.0;
  const double precision = static_cast<double>(lcs) / static_cast<double>(cand.size());
  const double recall = static_cast<double>(lcs) / static_cast<double>(ref.size());
  return 2.0 * precision * recall / (precision + recall);
}

bool contains_token_run(const TokenSeq& haystack, const TokenSeq& needle) {
  if (needle.empty()) return false;
  const auto& h = haystack.tokens();
  const auto& n = needle.tokens();
  return std::search(h.begin(), h.end(), n.begin(), n.end()) != h.end();
}

}  // namespace factgym::text
