#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace w2c {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,          // malformed flags or config values
  kExitMissingInput = 3,   // a declared input artifact is absent
  kExitMismatch = 4,       // n/k/h/task disagree between artifacts
  kExitFormat = 5,         // malformed artifact contents
  kExitNonFinite = 6,      // training diverged
};

/// Runs one command. `args` excludes the program name, e.g.
/// {"build-akn", "--corpus", "c.txt", "--out", "a.w2ca"}. Summaries go to
/// `out`, diagnostics to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace w2c
