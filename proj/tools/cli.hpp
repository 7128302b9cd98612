#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace sea::cli {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitInputError = 2,
  kExitDiverged = 3,
  kExitInternalError = 4,
};

// Runs the `sea` command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Applies SEA_LOG_LEVEL (error, info or debug; default info) and routes
// library logging to stderr.
void configure_logging();

}  // namespace sea::cli
