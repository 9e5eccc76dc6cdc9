#pragma once

#include <ostream>

namespace factgym::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInputError = 2,
  kNumericalError = 3,
  kRemoteError = 4,
};

// Entry point of the factgym tool. Writes results to `out` and diagnostics
// to `err`; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace factgym::cli
