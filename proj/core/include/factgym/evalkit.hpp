#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "factgym/domain.hpp"

namespace factgym::eval {

// Counts with fake as the positive class.
struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t total() const noexcept { return tp + fp + fn + tn; }
  bool operator==(const Confusion&) const = default;
};

// Errc::LengthMismatch for unequal lengths, Errc::Empty for no samples.
Confusion confusion(std::span<const Label> preds, std::span<const Label> truths);

struct Metrics {
  double acc = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Accuracy, precision, recall and F1. A zero denominator yields 0 for
/// precision or recall, and F1 is 0 when precision + recall is 0.
/// Errc::Empty when the confusion holds no samples.
Metrics classification_metrics(const Confusion& c);

struct ExplainItem {
  Label truth = Label::Real;
  Label pred = Label::Real;
  std::string think_span;
  std::optional<Entity> fake_entity;
};

using JudgeFn = std::function<bool(const ExplainItem&)>;

struct Explainability {
  std::optional<double> accuracy;  // nullopt when no item qualifies
  std::size_t n = 0;               // qualifying items
};

/// Judge accuracy over items that are fake and predicted fake. Items outside
/// that subset are never passed to `judge`.
Explainability explainability_accuracy(std::span<const ExplainItem> items, const JudgeFn& judge);

struct Report {
  Metrics metrics;
  Explainability explainability;
  std::size_t n = 0;
};

nlohmann::ordered_json report_to_json(const Report& r);

}  // namespace factgym::eval
