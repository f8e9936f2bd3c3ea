#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vmsim::cli {

// Exit codes are a function of the outcome class only.
enum ExitCode : int {
  kOk = 0,
  kInputError = 2,
  kLimitBreach = 3,
  kCorruption = 4,
};

// Entry point behind the `vmsim` binary. `args` excludes argv[0]. Reports go
// to --out or `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vmsim::cli
