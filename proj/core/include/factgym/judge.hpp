#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <utility>

#include "factgym/chat_client.hpp"
#include "factgym/domain.hpp"

namespace factgym {

inline constexpr const char* kJudgeTokenEnv = "FACTGYM_JUDGE_TOKEN";

struct JudgeRequest {
  std::string think_span;  // non-empty
  Entity fake_entity;
};

enum class JudgeProvider { Lexical, Remote };

std::string_view to_string(JudgeProvider p) noexcept;

struct JudgeVerdict {
  bool correct = false;
  JudgeProvider provider = JudgeProvider::Lexical;
  std::int64_t latency_ms = 0;
};

struct RemoteJudgeConfig {
  ChatEndpoint endpoint;
  int max_in_flight = 4;
  // Propagate remote failures instead of falling back to the lexical rule.
  bool strict = false;
};

/// True iff the tokenized entity surface appears as a contiguous token run in
/// the tokenized think span. Deterministic and pure.
JudgeVerdict lexical_judge(const JudgeRequest& req);

// The prompt sent to a remote judge. Interpolates the reasoning trace and the
// manipulated entity; the reply must be a bare True/False token.
std::string build_judge_prompt(const JudgeRequest& req);

// Accepts exactly "true"/"false" after trimming, any case.
std::optional<bool> parse_verdict(std::string_view reply);

/// One remote judge call. Throws Error with Errc::Timeout, Errc::Transport or
/// Errc::UnparseableVerdict; the detail holds the raw reply.
JudgeVerdict remote_judge(const JudgeRequest& req, const RemoteJudgeConfig& cfg);

// Tries the remote judge when `cfg` is set, falling back to lexical on any
// failure. Never throws.
JudgeVerdict judge_with_fallback(const JudgeRequest& req, const std::optional<RemoteJudgeConfig>& cfg);

/// Verdict provider consulted by reward scoring.
class EntityJudge {
 public:
  virtual ~EntityJudge() = default;
  virtual JudgeVerdict judge(const JudgeRequest& req) = 0;
};

class LexicalJudge final : public EntityJudge {
 public:
  JudgeVerdict judge(const JudgeRequest& req) override { return lexical_judge(req); }
};

// Remote judge with an in-flight cap, an in-run memo, and lexical fallback
// (unless cfg.strict). Safe to call from several threads.
class RemoteJudge final : public EntityJudge {
 public:
  explicit RemoteJudge(RemoteJudgeConfig cfg);

  JudgeVerdict judge(const JudgeRequest& req) override;

  std::uint64_t remote_calls() const;
  std::uint64_t fallbacks() const;

 private:
  using MemoKey = std::pair<std::string, std::string>;

  RemoteJudgeConfig cfg_;
  std::counting_semaphore<> slots_;
  mutable std::mutex mu_;
  std::map<MemoKey, JudgeVerdict> memo_;
  std::uint64_t next_id_ = 0;
  std::uint64_t remote_calls_ = 0;
  std::uint64_t fallbacks_ = 0;
};

std::unique_ptr<EntityJudge> make_judge(const std::optional<RemoteJudgeConfig>& cfg);

}  // namespace factgym
