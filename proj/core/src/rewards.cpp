#include "factgym/rewards.hpp"

#include <algorithm>
#include <cctype>

#include "factgym/textmetrics.hpp"

namespace factgym::rewards {

namespace {

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool has_content(const std::optional<std::string>& span) {
  return span && span->find_first_not_of(" \t\n\r\f\v") != std::string::npos;
}

}  // namespace

void validate(const KeywordPolicy& kp) {
  if (kp.keywords.empty()) throw Error(Errc::InvalidArgument, "keyword list is empty");
  if (kp.min_distinct < 1 || static_cast<std::size_t>(kp.min_distinct) > kp.keywords.size()) {
    throw Error(Errc::InvalidArgument, "min_distinct out of range");
  }
}

double accuracy_reward_md(const Response& resp, Label truth) {
  return resp.parsed_label && *resp.parsed_label == truth ? 1.0 : 0.0;
}

double format_reward(const Response& resp) { return resp.well_formed ? 1.0 : 0.0; }

double keyword_reward(const Response& resp, const KeywordPolicy& kp) {
  if (!resp.think_span) return 0.0;
  const std::string think = kp.case_insensitive ? ascii_lower(*resp.think_span) : *resp.think_span;
  std::vector<std::string> seen;
  for (const auto& kw : kp.keywords) {
    std::string needle = kp.case_insensitive ? ascii_lower(kw) : kw;
    if (needle.empty() || std::find(seen.begin(), seen.end(), needle) != seen.end()) continue;
    if (think.find(needle) != std::string::npos) seen.push_back(std::move(needle));
  }
  return static_cast<int>(seen.size()) >= kp.min_distinct ? 1.0 : 0.0;
}

RewardBreakdown total_reward_md(const Response& resp, const Sample& sample, std::optional<bool> judge_verdict,
                                const RewardWeights& w, const KeywordPolicy& kp) {
  if (sample.task != TaskKind::MD) throw Error(Errc::WrongTask, "expected an MD sample");
  if (!sample.label) throw Error(Errc::MissingField, "label");

  RewardBreakdown b;
  b.r_acc = accuracy_reward_md(resp, *sample.label);
  b.r_format = format_reward(resp);
  b.r_word = keyword_reward(resp, kp);
  if (*sample.label == Label::Real) {
    b.total = w.real_branch.acc * b.r_acc + w.real_branch.format * b.r_format + w.real_branch.word * b.r_word;
    return b;
  }
  if (!judge_verdict) throw Error(Errc::JudgeRequired, "fake sample " + sample.id);
  b.r_entity = *judge_verdict ? 1.0 : 0.0;
  b.total = w.fake_branch.acc * b.r_acc + w.fake_branch.format * b.r_format + w.fake_branch.word * b.r_word +
            w.fake_branch.entity * b.r_entity;
  return b;
}

RewardBreakdown total_reward_ocr(std::string_view predicted, const Sample& sample, bool resp_format_ok,
                                 const RewardWeights& w) {
  if (sample.task != TaskKind::OCR) throw Error(Errc::WrongTask, "expected an OCR sample");
  if (!sample.ocr_ground_truth) throw Error(Errc::MissingField, "ocr_ground_truth");
  RewardBreakdown b;
  b.r_acc = text::normalized_edit_similarity(predicted, *sample.ocr_ground_truth);
  b.r_format = resp_format_ok ? 1.0 : 0.0;
  b.total = w.aux.acc * b.r_acc + w.aux.format * b.r_format;
  return b;
}

RewardBreakdown total_reward_cap(std::string_view predicted, const Sample& sample, bool resp_format_ok,
                                 const RewardWeights& w) {
  if (sample.task != TaskKind::CAP) throw Error(Errc::WrongTask, "expected a CAP sample");
  if (!sample.caption_ground_truth) throw Error(Errc::MissingField, "caption_ground_truth");
  RewardBreakdown b;
  b.r_acc = text::rouge_l(predicted, *sample.caption_ground_truth);
  b.r_format = resp_format_ok ? 1.0 : 0.0;
  b.total = w.aux.acc * b.r_acc + w.aux.format * b.r_format;
  return b;
}

std::string aux_prediction(const Response& resp) {
  if (resp.answer_text) return *resp.answer_text;
  constexpr std::string_view open = "<answer>";
  constexpr std::string_view close = "</answer>";
  const std::string_view raw = resp.raw;
  const auto a = raw.find(open);
  const auto b = raw.find(close);
  if (a != std::string_view::npos && b != std::string_view::npos && b >= a + open.size() &&
      raw.find(open, a + 1) == std::string_view::npos && raw.find(close, b + 1) == std::string_view::npos) {
    return std::string(raw.substr(a + open.size(), b - a - open.size()));
  }
  if (raw.find('<') == std::string_view::npos) return std::string(raw);
  return {};
}

ScoreResult score(const Response& resp, const Sample& sample, const ScoreDeps& deps) {
  ScoreResult out;
  switch (sample.task) {
    case TaskKind::MD: {
      std::optional<bool> verdict;
      if (sample.label == Label::Fake) {
        verdict = false;
        if (has_content(resp.think_span) && sample.fake_entity) {
          const JudgeRequest req{*resp.think_span, *sample.fake_entity};
          const JudgeVerdict v = deps.judge ? deps.judge->judge(req) : lexical_judge(req);
          verdict = v.correct;
          out.judge_provider = v.provider;
        }
      }
      out.breakdown = total_reward_md(resp, sample, verdict, deps.weights, deps.keywords);
      break;
    }
    case TaskKind::OCR:
      out.breakdown = total_reward_ocr(aux_prediction(resp), sample, resp.well_formed, deps.weights);
      break;
    case TaskKind::CAP:
      out.breakdown = total_reward_cap(aux_prediction(resp), sample, resp.well_formed, deps.weights);
      break;
  }
  return out;
}

ScoreResult score_text(std::string_view raw, const Sample& sample, const ScoreDeps& deps) {
  return score(text::parse_response(raw), sample, deps);
}

}  // namespace factgym::rewards
