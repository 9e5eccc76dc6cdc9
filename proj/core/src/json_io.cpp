#include "factgym/json_io.hpp"

namespace factgym {

namespace {

using json = nlohmann::json;

const std::string& required_string(const json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end()) throw Error(Errc::MissingField, field);
  if (!it->is_string()) throw Error(Errc::Schema, std::string(field) + " must be a string");
  return it->get_ref<const std::string&>();
}

std::optional<std::string> optional_string(const json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end()) return std::nullopt;
  if (!it->is_string()) throw Error(Errc::Schema, std::string(field) + " must be a string");
  return it->get<std::string>();
}

}  // namespace

ordered_json entity_to_json(const Entity& e) {
  ordered_json j;
  j["surface"] = e.surface;
  j["etype"] = std::string(to_string(e.etype));
  return j;
}

Entity entity_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::Schema, "entity must be an object");
  const auto& surface = required_string(j, "surface");
  const auto& etype = required_string(j, "etype");
  auto type = parse_entity_type(etype);
  if (!type) throw Error(Errc::Schema, "unknown etype '" + etype + "'");
  try {
    return make_entity(surface, *type);
  } catch (const Error& e) {
    throw Error(Errc::Schema, e.detail());
  }
}

ordered_json sample_to_json(const Sample& s) {
  ordered_json j;
  j["id"] = s.id;
  j["task"] = std::string(to_string(s.task));
  j["title"] = s.title;
  j["caption"] = s.caption;
  j["audio_transcript"] = s.audio_transcript;
  if (s.ocr_ground_truth) j["ocr_ground_truth"] = *s.ocr_ground_truth;
  if (s.caption_ground_truth) j["caption_ground_truth"] = *s.caption_ground_truth;
  if (s.label) j["label"] = std::string(to_string(*s.label));
  if (s.fake_entity) j["fake_entity"] = entity_to_json(*s.fake_entity);
  if (s.retrieval_strategy) j["retrieval_strategy"] = *s.retrieval_strategy;
  if (s.timestamp) j["timestamp"] = *s.timestamp;
  return j;
}

Sample sample_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::Schema, "sample must be an object");
  Sample s;
  s.id = required_string(j, "id");
  const auto& task = required_string(j, "task");
  auto kind = parse_task(task);
  if (!kind) throw Error(Errc::Schema, "unknown task '" + task + "'");
  s.task = *kind;
  s.title = optional_string(j, "title").value_or("");
  s.caption = optional_string(j, "caption").value_or("");
  s.audio_transcript = optional_string(j, "audio_transcript").value_or("");
  s.ocr_ground_truth = optional_string(j, "ocr_ground_truth");
  s.caption_ground_truth = optional_string(j, "caption_ground_truth");
  if (auto label = optional_string(j, "label")) {
    auto parsed = parse_label(*label);
    if (!parsed) throw Error(Errc::Schema, "unknown label '" + *label + "'");
    s.label = parsed;
  }
  if (auto it = j.find("fake_entity"); it != j.end()) s.fake_entity = entity_from_json(*it);
  s.retrieval_strategy = optional_string(j, "retrieval_strategy");
  s.timestamp = optional_string(j, "timestamp");
  validate_sample(s);
  return s;
}

std::string serialize_sample(const Sample& s) { return sample_to_json(s).dump(); }

Sample deserialize_sample(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(Errc::Schema, e.what());
  }
  return sample_from_json(j);
}

ordered_json breakdown_to_json(const RewardBreakdown& b) {
  ordered_json j;
  j["r_acc"] = b.r_acc;
  j["r_format"] = b.r_format;
  j["r_word"] = b.r_word;
  j["r_entity"] = b.r_entity;
  j["total"] = b.total;
  return j;
}

void for_each_jsonl_line(std::istream& in,
                         const std::function<void(std::size_t, const std::string&)>& on_line) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    on_line(number, line);
  }
}

std::vector<Sample> read_samples_jsonl(std::istream& in) {
  std::vector<Sample> out;
  for_each_jsonl_line(in, [&](std::size_t number, const std::string& line) {
    try {
      out.push_back(deserialize_sample(line));
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(number) + ": " + e.detail());
    }
  });
  return out;
}

}  // namespace factgym
