#include "factgym/chat_client.hpp"

#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "factgym/error.hpp"

namespace factgym {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(Errc::InvalidArgument, "endpoint url lacks a scheme: " + url);
  const auto path_begin = url.find('/', scheme_end + 3);
  if (path_begin == std::string::npos) return {url, "/"};
  return {url.substr(0, path_begin), url.substr(path_begin)};
}

}  // namespace

std::string env_or_empty(const char* name) {
  const char* value = std::getenv(name);
  return value ? std::string(value) : std::string();
}

std::string chat_complete(const ChatEndpoint& endpoint, const std::string& prompt,
                          const std::string& correlation_id) {
  const auto [origin, path] = split_url(endpoint.url);
  httplib::Client client(origin);
  const auto secs = endpoint.timeout.count() / 1000;
  const auto usecs = (endpoint.timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers{{"X-Request-Id", correlation_id}};
  if (!endpoint.token.empty()) headers.emplace("Authorization", "Bearer " + endpoint.token);

  nlohmann::json body;
  body["model"] = endpoint.model;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});

  const auto started = std::chrono::steady_clock::now();
  auto result = client.Post(path, headers, body.dump(), "application/json");
  const auto elapsed = std::chrono::steady_clock::now() - started;

  if (!result) {
    const auto err = result.error();
    const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                           (err == httplib::Error::Read && elapsed >= endpoint.timeout);
    throw Error(timed_out ? Errc::Timeout : Errc::Transport, httplib::to_string(err));
  }
  if (result->status < 200 || result->status >= 300) {
    throw Error(Errc::Transport, "HTTP " + std::to_string(result->status) + ": " + result->body);
  }

  try {
    const auto reply = nlohmann::json::parse(result->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::Transport, result->body);
  }
}

}  // namespace factgym
