#pragma once

#include <deque>
#include <string>
#include <string_view>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

namespace factgym::cli {

/// Command parameters resolved from three layers: flags override the config
/// file, which overrides built-in defaults.
///
/// Scalar parameters get a `--kebab-case` flag; object and array parameters
/// are settable from the config file only. A config file holds top-level
/// keys shared by all commands and an optional section named after the
/// command whose keys win over the top level.
class Params {
 public:
  Params(CLI::App& app, std::string command);

  void add(const std::string& key, nlohmann::ordered_json def, const std::string& help);

  // Applies the config file (empty path: none) and the parsed flags.
  void resolve(const std::string& config_path);

  const nlohmann::ordered_json& get(const std::string& key) const;
  double num(const std::string& key) const;
  long long integer(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::string str(const std::string& key) const;

  const nlohmann::ordered_json& resolved() const noexcept { return resolved_; }
  const nlohmann::ordered_json& sources() const noexcept { return sources_; }

 private:
  struct Entry {
    std::string key;
    nlohmann::ordered_json def;
    std::string raw;
    bool bool_value = false;
    CLI::Option* option = nullptr;
  };

  void apply(Entry& e, const nlohmann::json& value, std::string_view origin);

  CLI::App& app_;
  std::string command_;
  std::deque<Entry> entries_;
  nlohmann::ordered_json resolved_ = nlohmann::ordered_json::object();
  nlohmann::ordered_json sources_ = nlohmann::ordered_json::object();
};

}  // namespace factgym::cli
