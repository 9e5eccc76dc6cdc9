#include "params.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "factgym/error.hpp"

namespace factgym::cli {

namespace {

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

nlohmann::json parse_flag_value(const nlohmann::ordered_json& def, const std::string& raw, const std::string& flag) {
  auto fail = [&](const char* what) { return Error(Errc::InvalidArgument, flag + " expects " + what + ", got '" + raw + "'"); };
  if (def.is_string()) return raw;
  const char* first = raw.data();
  const char* last = raw.data() + raw.size();
  if (def.is_number_unsigned()) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || p != last) throw fail("a non-negative integer");
    return v;
  }
  if (def.is_number_integer()) {
    long long v = 0;
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || p != last) throw fail("an integer");
    return v;
  }
  double v = 0.0;
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || p != last) throw fail("a number");
  return v;
}

bool same_kind(const nlohmann::ordered_json& def, const nlohmann::json& v) {
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_string()) return v.is_string();
  if (def.is_number_unsigned()) return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_number()) return v.is_number();
  if (def.is_object()) return v.is_object();
  if (def.is_array()) return v.is_array();
  return false;
}

}  // namespace

Params::Params(CLI::App& app, std::string command) : app_(app), command_(std::move(command)) {}

void Params::add(const std::string& key, nlohmann::ordered_json def, const std::string& help) {
  auto& e = entries_.emplace_back();
  e.key = key;
  e.def = std::move(def);
  if (e.def.is_boolean()) {
    e.option = app_.add_flag(flag_name(key), e.bool_value, help);
  } else if (e.def.is_primitive()) {
    const char* type = e.def.is_number_integer() ? "INT" : e.def.is_number() ? "FLOAT" : "TEXT";
    e.option = app_.add_option(flag_name(key), e.raw, help)
                   ->type_name(type)
                   ->default_str(e.def.is_string() ? e.def.get<std::string>() : e.def.dump());
  }
}

void Params::apply(Entry& e, const nlohmann::json& value, std::string_view origin) {
  if (!same_kind(e.def, value)) {
    throw Error(Errc::Schema, "config key '" + e.key + "' has the wrong type (expected like " + e.def.dump() + ")");
  }
  if (e.def.is_number_unsigned()) {
    resolved_[e.key] = value.get<std::uint64_t>();
  } else {
    resolved_[e.key] = value;
  }
  sources_[e.key] = origin;
}

void Params::resolve(const std::string& config_path) {
  for (auto& e : entries_) {
    resolved_[e.key] = e.def;
    sources_[e.key] = "default";
  }

  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw Error(Errc::Io, "cannot open config file " + config_path);
    nlohmann::json file;
    try {
      file = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& ex) {
      throw Error(Errc::Schema, "config file " + config_path + ": " + ex.what());
    }
    if (!file.is_object()) throw Error(Errc::Schema, "config file must hold a JSON object");
    auto find = [&](const std::string& key) {
      return std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.key == key; });
    };
    for (const auto& [key, value] : file.items()) {
      if (value.is_object() && find(key) == entries_.end()) continue;  // a command section
      if (auto it = find(key); it != entries_.end()) apply(*it, value, "config");
    }
    if (auto section = file.find(command_); section != file.end()) {
      if (!section->is_object()) throw Error(Errc::Schema, "config section '" + command_ + "' must be an object");
      for (const auto& [key, value] : section->items()) {
        auto it = find(key);
        if (it == entries_.end()) throw Error(Errc::Schema, "unknown key '" + key + "' in config section '" + command_ + "'");
        apply(*it, value, "config");
      }
    }
  }

  for (auto& e : entries_) {
    if (!e.option || e.option->count() == 0) continue;
    if (e.def.is_boolean()) {
      resolved_[e.key] = e.bool_value;
    } else {
      resolved_[e.key] = parse_flag_value(e.def, e.raw, flag_name(e.key));
    }
    sources_[e.key] = "flag";
  }
}

const nlohmann::ordered_json& Params::get(const std::string& key) const { return resolved_.at(key); }
double Params::num(const std::string& key) const { return get(key).get<double>(); }
long long Params::integer(const std::string& key) const { return get(key).get<long long>(); }
std::uint64_t Params::u64(const std::string& key) const { return get(key).get<std::uint64_t>(); }
bool Params::flag(const std::string& key) const { return get(key).get<bool>(); }
std::string Params::str(const std::string& key) const { return get(key).get<std::string>(); }

}  // namespace factgym::cli
