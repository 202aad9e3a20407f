#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace swarmtsc::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kDataError = 3,
  kDiverged = 4,
};

/// Runs one subcommand. `args` excludes the program name. Log lines go to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace swarmtsc::cli
