#pragma once

#include <string>
#include <vector>

namespace trialkit::cli {

/// Runs one command line (without the program name) and returns the process
/// exit code: 0 clean, 1 usage or config error, 2 run completed but raised
/// red alerts, 3 replay found mismatches.
int dispatch(const std::vector<std::string>& args);

}  // namespace trialkit::cli
