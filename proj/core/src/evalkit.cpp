#include "factgym/evalkit.hpp"

namespace factgym::eval {

Confusion confusion(std::span<const Label> preds, std::span<const Label> truths) {
  if (preds.size() != truths.size()) {
    throw Error(Errc::LengthMismatch,
                std::to_string(preds.size()) + " predictions vs " + std::to_string(truths.size()) + " truths");
  }
  if (preds.empty()) throw Error(Errc::Empty, "no predictions");
  Confusion c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == Label::Fake;
    const bool t = truths[i] == Label::Fake;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

Metrics classification_metrics(const Confusion& c) {
  if (c.total() == 0) throw Error(Errc::Empty, "confusion has no samples");
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  Metrics m;
  m.acc = ratio(c.tp + c.tn, c.total());
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  const double pr = m.precision + m.recall;
  m.f1 = pr > 0.0 ? 2.0 * m.precision * m.recall / pr : 0.0;
  return m;
}

Explainability explainability_accuracy(std::span<const ExplainItem> items, const JudgeFn& judge) {
  Explainability out;
  std::size_t correct = 0;
  for (const auto& item : items) {
    if (item.truth != Label::Fake || item.pred != Label::Fake) continue;
    ++out.n;
    if (judge(item)) ++correct;
  }
  if (out.n > 0) out.accuracy = static_cast<double>(correct) / static_cast<double>(out.n);
  return out;
}

nlohmann::ordered_json report_to_json(const Report& r) {
  nlohmann::ordered_json j;
  j["acc"] = r.metrics.acc;
  j["precision"] = r.metrics.precision;
  j["recall"] = r.metrics.recall;
  j["f1"] = r.metrics.f1;
  if (r.explainability.accuracy) {
    j["explainability_acc"] = *r.explainability.accuracy;
  } else {
    j["explainability_acc"] = nullptr;
  }
  j["n"] = r.n;
  j["n_explainability"] = r.explainability.n;
  return j;
}

}  // namespace factgym::eval
