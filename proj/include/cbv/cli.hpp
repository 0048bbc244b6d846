#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cbv {

enum ExitCode : int { kExitOk = 0, kExitFindings = 1, kExitComputation = 2, kExitUsage = 64 };

/// Entry point of the `cbv` tool. argv[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cbv
