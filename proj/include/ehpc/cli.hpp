#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ehpc::cli {

/// Stable across every command.
enum ExitCode : int {
  kOk = 0,
  kArgumentError = 2,
  kIoError = 3,
  kValidationError = 4,
};

/// Entry point of the `ehpc` tool. `args` excludes the program name.
/// Machine-readable results go to `out` (or -o files), summaries and
/// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ehpc::cli
