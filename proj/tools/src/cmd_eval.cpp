#include <unordered_map>

#include "common.hpp"
#include "factgym/evalkit.hpp"
#include "factgym/json_io.hpp"
#include "factgym/textmetrics.hpp"

namespace factgym::cli {

namespace {

// A prediction either carries a raw response, which is parsed, or an explicit
// label with an optional reasoning trace.
struct Prediction {
  std::size_t line = 0;
  std::string sample_id;
  std::optional<Label> label;
  std::string think;
};

std::vector<Prediction> read_predictions(std::istream& in) {
  std::vector<Prediction> out;
  for_each_jsonl_line(in, [&](std::size_t line, const std::string& text) {
    const auto where = "predictions line " + std::to_string(line);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::Schema, where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("sample_id") || !j["sample_id"].is_string()) {
      throw Error(Errc::MissingField, where + ": sample_id");
    }
    Prediction pred{line, j["sample_id"].get<std::string>(), std::nullopt, {}};
    if (j.contains("response")) {
      if (!j["response"].is_string()) throw Error(Errc::Schema, where + ": response must be a string");
      const auto resp = text::parse_response(j["response"].get<std::string>());
      pred.label = resp.parsed_label;
      pred.think = resp.think_span.value_or("");
    } else if (j.contains("label")) {
      if (!j["label"].is_string()) throw Error(Errc::Schema, where + ": label must be a string");
      pred.label = parse_label(j["label"].get<std::string>());
      if (!pred.label) throw Error(Errc::Schema, where + ": unknown label");
      if (j.contains("think")) {
        if (!j["think"].is_string()) throw Error(Errc::Schema, where + ": think must be a string");
        pred.think = j["think"].get<std::string>();
      }
    } else {
      throw Error(Errc::MissingField, where + ": response or label");
    }
    out.push_back(std::move(pred));
  });
  return out;
}

Label opposite(Label l) { return l == Label::Fake ? Label::Real : Label::Fake; }

}  // namespace

void register_eval(Command& c) {
  auto& p = *c.params;
  add_common_params(p);
  p.add("samples", "", "Samples JSONL with ground truth");
  p.add("predictions", "", "Predictions JSONL: {\"sample_id\",\"response\"} or {\"sample_id\",\"label\",\"think\"}");
  p.add("out", "", "Report JSON (standard output when empty)");
  add_judge_params(p);
}

int cmd_eval(Command& c, Io& io) {
  const auto& p = *c.params;
  auto samples_in = open_input(p.str("samples"));
  const auto samples = read_samples_jsonl(samples_in);
  auto preds_in = open_input(p.str("predictions"));
  const auto preds = read_predictions(preds_in);

  std::unordered_map<std::string, const Sample*> by_id;
  for (const auto& s : samples) {
    if (!by_id.emplace(s.id, &s).second) throw Error(Errc::DuplicateId, "sample id " + s.id);
  }

  std::vector<Label> predicted, truths;
  std::vector<eval::ExplainItem> items;
  for (const auto& pr : preds) {
    auto it = by_id.find(pr.sample_id);
    if (it == by_id.end()) {
      throw Error(Errc::MissingField,
                  "predictions line " + std::to_string(pr.line) + ": unknown sample_id '" + pr.sample_id + "'");
    }
    const Sample& s = *it->second;
    if (s.task != TaskKind::MD) continue;
    const Label truth = *s.label;
    // An unparseable prediction counts as wrong whatever the truth is.
    const Label guess = pr.label.value_or(opposite(truth));
    predicted.push_back(guess);
    truths.push_back(truth);
    items.push_back({truth, guess, pr.think, s.fake_entity});
  }

  auto judge = make_judge(judge_config(p));
  eval::Report report;
  report.metrics = eval::classification_metrics(eval::confusion(predicted, truths));
  report.n = predicted.size();
  report.explainability = eval::explainability_accuracy(items, [&](const eval::ExplainItem& item) {
    if (item.think_span.empty() || !item.fake_entity) return false;
    return judge->judge({item.think_span, *item.fake_entity}).correct;
  });

  auto doc = eval::report_to_json(report);
  doc["config"] = p.resolved();
  write_json(p.str("out"), doc, io.out);
  return 0;
}

}  // namespace factgym::cli
