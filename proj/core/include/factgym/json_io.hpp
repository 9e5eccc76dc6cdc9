#pragma once

#include <functional>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "factgym/domain.hpp"

namespace factgym {

using ordered_json = nlohmann::ordered_json;

// Canonical field order follows the JSONL sample schema; absent optionals are
// omitted rather than written as null.
ordered_json sample_to_json(const Sample& s);
Sample sample_from_json(const nlohmann::json& j);

std::string serialize_sample(const Sample& s);
Sample deserialize_sample(std::string_view line);

ordered_json entity_to_json(const Entity& e);
Entity entity_from_json(const nlohmann::json& j);

ordered_json breakdown_to_json(const RewardBreakdown& b);

// Calls `on_line(line_number, text)` for every non-blank line. Line numbers
// are 1-based so they can go straight into error messages.
void for_each_jsonl_line(std::istream& in, const std::function<void(std::size_t, const std::string&)>& on_line);

std::vector<Sample> read_samples_jsonl(std::istream& in);

}  // namespace factgym
