#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace biouncert::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kOk = 0,
    kRuntimeError = 1, // I/O or data errors
    kUsageError = 2,   // bad arguments or configuration
    kCellFailed = 3,   // the report contains failed cells
};

/// Runs the tool with argv-style arguments (args[0] is the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace biouncert::cli
