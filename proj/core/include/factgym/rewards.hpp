#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "factgym/domain.hpp"
#include "factgym/judge.hpp"

namespace factgym::rewards {

struct KeywordPolicy {
  std::vector<std::string> keywords{"first", "however", "in conclusion", "therefore", "finally"};
  int min_distinct = 2;
  bool case_insensitive = true;
};

// Throws Errc::InvalidArgument on an empty keyword list or a min_distinct
// outside [1, keywords.size()].
void validate(const KeywordPolicy& kp);

double accuracy_reward_md(const Response& resp, Label truth);
double format_reward(const Response& resp);
double keyword_reward(const Response& resp, const KeywordPolicy& kp);

/// Weighted misinformation-detection reward. The branch follows the
/// ground-truth label: a real sample never includes an entity term, a fake
/// sample requires the judge verdict (Errc::JudgeRequired otherwise).
RewardBreakdown total_reward_md(const Response& resp, const Sample& sample, std::optional<bool> judge_verdict,
                                const RewardWeights& w, const KeywordPolicy& kp);

// 0.9 * normalized edit similarity + 0.1 * format bit. Errc::WrongTask unless
// the sample is an OCR sample.
RewardBreakdown total_reward_ocr(std::string_view predicted, const Sample& sample, bool resp_format_ok,
                                 const RewardWeights& w = {});

// 0.9 * ROUGE-L + 0.1 * format bit. Errc::WrongTask unless a CAP sample.
RewardBreakdown total_reward_cap(std::string_view predicted, const Sample& sample, bool resp_format_ok,
                                 const RewardWeights& w = {});

// Text an auxiliary task is graded on: the answer block of a well-formed
// response, else the content of a lone <answer> block, else the raw text.
std::string aux_prediction(const Response& resp);

struct ScoreDeps {
  RewardWeights weights;
  KeywordPolicy keywords;
  EntityJudge* judge = nullptr;  // lexical when null
};

struct ScoreResult {
  RewardBreakdown breakdown;
  std::optional<JudgeProvider> judge_provider;  // set when the judge was consulted
};

/// Task-dispatched reward for one response.
///
/// The judge is consulted only for MD samples whose ground truth is fake and
/// whose response carries a non-empty think span. A fake sample with a
/// malformed response gets r_entity = 0 without a judge call.
ScoreResult score(const Response& resp, const Sample& sample, const ScoreDeps& deps);
ScoreResult score_text(std::string_view raw, const Sample& sample, const ScoreDeps& deps);

}  // namespace factgym::rewards
