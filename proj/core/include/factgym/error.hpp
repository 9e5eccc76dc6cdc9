#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace factgym {

enum class Errc {
  MissingField,
  InconsistentTask,
  Schema,
  InvalidArgument,
  JudgeRequired,
  WrongTask,
  Timeout,
  Transport,
  UnparseableVerdict,
  GroupTooSmall,
  DimensionMismatch,
  DuplicateId,
  EmptyStore,
  StoreTooSmall,
  NoTypedCandidate,
  AmbiguousSurface,
  EntityNotInTitle,
  LengthMismatch,
  Empty,
  Io,
  NonFinite,
};

std::string_view errc_name(Errc code) noexcept;

// Every failure the library reports is an Error carrying a machine-readable
// code. `detail` holds the field name, raw remote reply, or similar payload.
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail),
        code_(code),
        detail_(std::move(detail)) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace factgym
