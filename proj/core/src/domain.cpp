#include "factgym/domain.hpp"

#include <cctype>
#include <cmath>

namespace factgym {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MissingField: return "MissingField";
    case Errc::InconsistentTask: return "InconsistentTask";
    case Errc::Schema: return "Schema";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::JudgeRequired: return "JudgeRequired";
    case Errc::WrongTask: return "WrongTask";
    case Errc::Timeout: return "Timeout";
    case Errc::Transport: return "Transport";
    case Errc::UnparseableVerdict: return "UnparseableVerdict";
    case Errc::GroupTooSmall: return "GroupTooSmall";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::EmptyStore: return "EmptyStore";
    case Errc::StoreTooSmall: return "StoreTooSmall";
    case Errc::NoTypedCandidate: return "NoTypedCandidate";
    case Errc::AmbiguousSurface: return "AmbiguousSurface";
    case Errc::EntityNotInTitle: return "EntityNotInTitle";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::Empty: return "Empty";
    case Errc::Io: return "Io";
    case Errc::NonFinite: return "NonFinite";
  }
  return "Unknown";
}

namespace {

std::string normalize_token(std::string_view text) {
  const auto* ws = " \t\n\r\f\v";
  const auto begin = text.find_first_not_of(ws);
  if (begin == std::string_view::npos) return {};
  const auto end = text.find_last_not_of(ws);
  std::string out(text.substr(begin, end - begin + 1));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_trimmed(std::string_view s) {
  auto space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  return !s.empty() && !space(s.front()) && !space(s.back());
}

}  // namespace

std::string_view to_string(Label label) noexcept {
  return label == Label::Real ? "real" : "fake";
}

std::string_view to_string(TaskKind task) noexcept {
  switch (task) {
    case TaskKind::MD: return "MD";
    case TaskKind::OCR: return "OCR";
    case TaskKind::CAP: return "CAP";
  }
  return "MD";
}

std::string_view to_string(EntityType type) noexcept {
  switch (type) {
    case EntityType::Person: return "person";
    case EntityType::Location: return "location";
    case EntityType::Event: return "event";
    case EntityType::Organization: return "organization";
  }
  return "person";
}

std::optional<Label> parse_label(std::string_view text) {
  const auto t = normalize_token(text);
  if (t == "real") return Label::Real;
  if (t == "fake") return Label::Fake;
  return std::nullopt;
}

std::optional<TaskKind> parse_task(std::string_view text) {
  const auto t = normalize_token(text);
  if (t == "md") return TaskKind::MD;
  if (t == "ocr") return TaskKind::OCR;
  if (t == "cap") return TaskKind::CAP;
  return std::nullopt;
}

std::optional<EntityType> parse_entity_type(std::string_view text) {
  const auto t = normalize_token(text);
  if (t == "person") return EntityType::Person;
  if (t == "location") return EntityType::Location;
  if (t == "event") return EntityType::Event;
  if (t == "organization") return EntityType::Organization;
  return std::nullopt;
}

Entity make_entity(std::string surface, EntityType etype) {
  if (!is_trimmed(surface)) {
    throw Error(Errc::InvalidArgument, "entity surface must be non-empty and trimmed: '" + surface + "'");
  }
  return Entity{std::move(surface), etype};
}

const Sample& validate_sample(const Sample& s) {
  if (s.fake_entity && !is_trimmed(s.fake_entity->surface)) {
    throw Error(Errc::InvalidArgument, "fake_entity.surface");
  }
  switch (s.task) {
    case TaskKind::MD:
      if (!s.label) throw Error(Errc::MissingField, "label");
      if (*s.label == Label::Fake && !s.fake_entity) throw Error(Errc::MissingField, "fake_entity");
      if (*s.label == Label::Real && s.fake_entity) {
        throw Error(Errc::InconsistentTask, "fake_entity present on a real sample");
      }
      if (s.ocr_ground_truth) throw Error(Errc::InconsistentTask, "ocr_ground_truth on MD sample");
      if (s.caption_ground_truth) throw Error(Errc::InconsistentTask, "caption_ground_truth on MD sample");
      break;
    case TaskKind::OCR:
      if (!s.ocr_ground_truth) throw Error(Errc::MissingField, "ocr_ground_truth");
      if (s.label || s.fake_entity) throw Error(Errc::InconsistentTask, "label on OCR sample");
      if (s.caption_ground_truth) throw Error(Errc::InconsistentTask, "caption_ground_truth on OCR sample");
      break;
    case TaskKind::CAP:
      if (!s.caption_ground_truth) throw Error(Errc::MissingField, "caption_ground_truth");
      if (s.label || s.fake_entity) throw Error(Errc::InconsistentTask, "label on CAP sample");
      if (s.ocr_ground_truth) throw Error(Errc::InconsistentTask, "ocr_ground_truth on CAP sample");
      break;
  }
  return s;
}

void validate_weights(const RewardWeights& w) {
  auto check = [](std::string_view name, std::initializer_list<double> parts) {
    double sum = 0.0;
    for (double p : parts) {
      if (!(p >= 0.0)) throw Error(Errc::InvalidArgument, std::string(name) + " has a negative weight");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw Error(Errc::InvalidArgument, std::string(name) + " weights do not sum to 1");
    }
  };
  check("real_branch", {w.real_branch.acc, w.real_branch.format, w.real_branch.word});
  check("fake_branch", {w.fake_branch.acc, w.fake_branch.format, w.fake_branch.word, w.fake_branch.entity});
  check("aux", {w.aux.acc, w.aux.format});
}

}  // namespace factgym
