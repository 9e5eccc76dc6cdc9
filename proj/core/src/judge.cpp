#include "factgym/judge.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>

#include "factgym/textmetrics.hpp"

namespace factgym {

namespace {

std::int64_t millis_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

std::string_view to_string(JudgeProvider p) noexcept {
  return p == JudgeProvider::Lexical ? "lexical" : "remote";
}

JudgeVerdict lexical_judge(const JudgeRequest& req) {
  const auto think = text::tokenize(req.think_span);
  const auto entity = text::tokenize(req.fake_entity.surface);
  return JudgeVerdict{text::contains_token_run(think, entity), JudgeProvider::Lexical, 0};
}

std::string build_judge_prompt(const JudgeRequest& req) {
  std::string prompt;
  prompt += "You are verifying the reasoning of a misinformation detector.\n";
  prompt += "The news item was manipulated by inserting a fake entity.\n";
  prompt += "Fake entity: " + req.fake_entity.surface + " (" + std::string(to_string(req.fake_entity.etype)) +
            ")\n";
  prompt += "Reasoning:\n<<<\n" + req.think_span + "\n>>>\n";
  prompt +=
      "Does the reasoning explicitly and correctly identify this fake entity as the manipulated "
      "element? Reply with exactly one word: True or False.";
  return prompt;
}

std::optional<bool> parse_verdict(std::string_view reply) {
  const auto* ws = " \t\n\r\f\v";
  const auto begin = reply.find_first_not_of(ws);
  if (begin == std::string_view::npos) return std::nullopt;
  const auto end = reply.find_last_not_of(ws);
  std::string token(reply.substr(begin, end - begin + 1));
  for (char& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (token == "true") return true;
  if (token == "false") return false;
  return std::nullopt;
}

JudgeVerdict remote_judge(const JudgeRequest& req, const RemoteJudgeConfig& cfg) {
  static std::atomic<std::uint64_t> counter{0};
  const auto started = std::chrono::steady_clock::now();
  const auto reply = chat_complete(cfg.endpoint, build_judge_prompt(req), "judge-" + std::to_string(counter++));
  const auto verdict = parse_verdict(reply);
  if (!verdict) throw Error(Errc::UnparseableVerdict, reply);
  return JudgeVerdict{*verdict, JudgeProvider::Remote, millis_since(started)};
}

JudgeVerdict judge_with_fallback(const JudgeRequest& req, const std::optional<RemoteJudgeConfig>& cfg) {
  if (cfg && !cfg->endpoint.url.empty()) {
    try {
      return remote_judge(req, *cfg);
    } catch (const Error&) {
    }
  }
  return lexical_judge(req);
}

RemoteJudge::RemoteJudge(RemoteJudgeConfig cfg)
    : cfg_(std::move(cfg)), slots_(std::max(1, cfg_.max_in_flight)) {}

JudgeVerdict RemoteJudge::judge(const JudgeRequest& req) {
  MemoKey key{req.think_span, req.fake_entity.surface + '\x1f' + std::string(to_string(req.fake_entity.etype))};
  std::string correlation;
  {
    std::lock_guard lock(mu_);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    correlation = "judge-" + std::to_string(next_id_++);
  }

  JudgeVerdict verdict;
  try {
    slots_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{slots_};
    const auto started = std::chrono::steady_clock::now();
    const auto reply = chat_complete(cfg_.endpoint, build_judge_prompt(req), correlation);
    const auto parsed = parse_verdict(reply);
    if (!parsed) throw Error(Errc::UnparseableVerdict, reply);
    verdict = JudgeVerdict{*parsed, JudgeProvider::Remote, millis_since(started)};
    std::lock_guard lock(mu_);
    ++remote_calls_;
  } catch (const Error&) {
    if (cfg_.strict) throw;
    std::lock_guard lock(mu_);
    ++fallbacks_;
    return lexical_judge(req);
  }

  std::lock_guard lock(mu_);
  memo_.emplace(std::move(key), verdict);
  return verdict;
}

std::uint64_t RemoteJudge::remote_calls() const {
  std::lock_guard lock(mu_);
  return remote_calls_;
}

std::uint64_t RemoteJudge::fallbacks() const {
  std::lock_guard lock(mu_);
  return fallbacks_;
}

std::unique_ptr<EntityJudge> make_judge(const std::optional<RemoteJudgeConfig>& cfg) {
  if (cfg && !cfg->endpoint.url.empty()) return std::make_unique<RemoteJudge>(*cfg);
  return std::make_unique<LexicalJudge>();
}

}  // namespace factgym
