#include <unordered_map>

#include "common.hpp"
#include "factgym/json_io.hpp"
#include "factgym/parallel.hpp"

namespace factgym::cli {

namespace {

struct ResponseRecord {
  std::size_t line = 0;
  std::string sample_id;
  std::string text;
};

std::vector<ResponseRecord> read_responses(std::istream& in) {
  std::vector<ResponseRecord> out;
  for_each_jsonl_line(in, [&](std::size_t line, const std::string& text) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::Schema, "responses line " + std::to_string(line) + ": " + e.what());
    }
    auto str = [&](const char* key) {
      if (!j.is_object() || !j.contains(key) || !j[key].is_string()) {
        throw Error(Errc::MissingField, "responses line " + std::to_string(line) + ": " + key);
      }
      return j[key].get<std::string>();
    };
    out.push_back({line, str("sample_id"), str("response")});
  });
  return out;
}

std::vector<Sample> read_samples(const std::string& path) {
  auto in = open_input(path);
  try {
    return read_samples_jsonl(in);
  } catch (const Error& e) {
    throw Error(e.code(), "samples " + e.detail());
  }
}

}  // namespace

void register_score(Command& c) {
  auto& p = *c.params;
  add_common_params(p);
  p.add("samples", "", "Samples JSONL");
  p.add("responses", "", "Responses JSONL with {\"sample_id\",\"response\"} records");
  p.add("out", "", "Rewards JSONL (standard output when empty)");
  add_reward_params(p);
  add_judge_params(p);
}

int cmd_score(Command& c, Io& io) {
  const auto& p = *c.params;
  auto deps = reward_deps(p);
  const auto samples = read_samples(p.str("samples"));
  auto responses_in = open_input(p.str("responses"));
  const auto responses = read_responses(responses_in);

  std::unordered_map<std::string, const Sample*> by_id;
  for (const auto& s : samples) {
    if (!by_id.emplace(s.id, &s).second) throw Error(Errc::DuplicateId, "sample id " + s.id);
  }
  std::vector<const Sample*> targets;
  for (const auto& r : responses) {
    auto it = by_id.find(r.sample_id);
    if (it == by_id.end()) {
      throw Error(Errc::MissingField,
                  "responses line " + std::to_string(r.line) + ": unknown sample_id '" + r.sample_id + "'");
    }
    targets.push_back(it->second);
  }

  auto judge = make_judge(judge_config(p));
  deps.judge = judge.get();
  std::vector<rewards::ScoreResult> results(responses.size());
  parallel_for(responses.size(), threads(p), [&](std::size_t i) {
    results[i] = rewards::score_text(responses[i].text, *targets[i], deps);
  });

  std::vector<std::string> lines;
  lines.reserve(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    nlohmann::ordered_json j;
    j["sample_id"] = responses[i].sample_id;
    const auto breakdown = breakdown_to_json(results[i].breakdown);
    for (const auto& [k, v] : breakdown.items()) j[k] = v;
    if (results[i].judge_provider) {
      j["judge_provider"] = std::string(to_string(*results[i].judge_provider));
    } else {
      j["judge_provider"] = nullptr;
    }
    lines.push_back(j.dump());
  }
  write_jsonl(p.str("out"), lines, p.resolved(), io.out);
  return 0;
}

}  // namespace factgym::cli
