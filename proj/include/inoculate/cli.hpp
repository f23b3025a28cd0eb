#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace inoculate::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kUsage = 2,
    kPartialFailure = 3,  // ablate: at least one configuration failed
};

/// Runs `inoculate <args...>` (args exclude the program name). Reports go to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace inoculate::cli
