#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace edenet {

// Parses and runs one CLI invocation, e.g. {"simulate", "--config", ...}.
// Returns the process exit code: 0 success, 1 usage, 2 config, 3 I/O,
// 4 numeric. Machine-readable results go to `out`, diagnostics to stderr.
int run_cli(std::vector<std::string> args, std::ostream& out);

}  // namespace edenet
