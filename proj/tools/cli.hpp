#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fastraft::cli {

/// Exit codes: 0 pass, 1 audit or campaign failure, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fastraft::cli
