#pragma once

#include <chrono>
#include <string>

namespace factgym {

// One chat-completion style endpoint (judge or rewriter).
struct ChatEndpoint {
  std::string url;    // e.g. http://127.0.0.1:8080/v1/chat/completions
  std::string model = "gpt-4o-mini";
  std::string token;  // sent as a bearer token when non-empty
  std::chrono::milliseconds timeout{10000};
};

/// POSTs {"model", "messages":[{"role":"user","content":prompt}]} and returns
/// the content of the first choice's message.
///
/// Throws Error(Timeout) when the call exceeds the endpoint timeout and
/// Error(Transport) for connection failures, non-2xx statuses, or replies
/// that are not a chat completion. The error detail carries the raw reply
/// body when one was received.
std::string chat_complete(const ChatEndpoint& endpoint, const std::string& prompt,
                          const std::string& correlation_id);

// Reads an environment variable; empty when unset.
std::string env_or_empty(const char* name);

}  // namespace factgym
