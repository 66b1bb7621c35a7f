#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace zosd::cli {

/// Process exit codes; stable across versions.
enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kMissingData = 2,
  kInternalError = 3,
};

/// Runs the `zosd` command line with `args` (excluding the program name),
/// writing results to `out` and errors/warnings to `err`.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace zosd::cli
