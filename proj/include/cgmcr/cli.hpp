#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cgmcr {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumerical = 3 };

/// Runs the `cgmcr` command line. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cgmcr
