#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qicnn {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumerical = 3,
};

/// Runs one `qicnn` subcommand. `args` excludes the program name. Results
/// go to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qicnn
