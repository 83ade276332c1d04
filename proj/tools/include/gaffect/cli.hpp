#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gaffect {

// Process exit codes of the gaffect CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitModel = 3;

/// Runs one CLI invocation; `args` excludes the program name.
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gaffect
