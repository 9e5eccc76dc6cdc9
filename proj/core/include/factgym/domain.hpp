#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "factgym/error.hpp"

namespace factgym {

enum class Label { Real, Fake };
enum class TaskKind { MD, OCR, CAP };
enum class EntityType { Person, Location, Event, Organization };

inline constexpr int kEntityTypeCount = 4;

std::string_view to_string(Label label) noexcept;
std::string_view to_string(TaskKind task) noexcept;
std::string_view to_string(EntityType type) noexcept;

// Case-insensitive after trimming ASCII whitespace. nullopt when unrecognized.
std::optional<Label> parse_label(std::string_view text);
std::optional<TaskKind> parse_task(std::string_view text);
std::optional<EntityType> parse_entity_type(std::string_view text);

struct Entity {
  std::string surface;
  EntityType etype = EntityType::Person;

  bool operator==(const Entity&) const = default;
};

// Throws Errc::InvalidArgument for an empty or untrimmed surface.
Entity make_entity(std::string surface, EntityType etype);

struct Sample {
  std::string id;
  TaskKind task = TaskKind::MD;
  std::string title;
  std::string caption;
  std::string audio_transcript;
  std::optional<std::string> ocr_ground_truth;
  std::optional<std::string> caption_ground_truth;
  std::optional<Label> label;
  std::optional<Entity> fake_entity;
  std::optional<std::string> retrieval_strategy;
  std::optional<std::string> timestamp;

  bool operator==(const Sample&) const = default;
};

/// Checks the conditional-field invariants of a Sample.
///
/// A missing conditional field raises Errc::MissingField naming the field; a
/// field present on the wrong task (e.g. a label on an OCR sample) raises
/// Errc::InconsistentTask. Returns the sample unchanged on success.
const Sample& validate_sample(const Sample& s);

/// A parsed policy output. The optional parts are populated only for
/// well-formed responses, so a malformed response carries no think span,
/// answer, or label.
struct Response {
  std::string raw;
  std::optional<std::string> think_span;
  std::optional<std::string> answer_text;
  std::optional<Label> parsed_label;
  bool well_formed = false;
};

struct RealBranchWeights {
  double acc = 0.8;
  double format = 0.1;
  double word = 0.1;
};

struct FakeBranchWeights {
  double acc = 0.7;
  double format = 0.1;
  double word = 0.1;
  double entity = 0.1;
};

struct AuxWeights {
  double acc = 0.9;
  double format = 0.1;
};

struct RewardWeights {
  RealBranchWeights real_branch;
  FakeBranchWeights fake_branch;
  AuxWeights aux;
};

// Throws Errc::InvalidArgument unless every branch sums to 1 within 1e-12
// and no weight is negative.
void validate_weights(const RewardWeights& w);

struct RewardBreakdown {
  double r_acc = 0.0;
  double r_format = 0.0;
  double r_word = 0.0;
  double r_entity = 0.0;
  double total = 0.0;
};

}  // namespace factgym
