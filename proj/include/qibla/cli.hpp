#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qibla::cli {

// Stable exit-code contract.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 2;
inline constexpr int kExitInsufficient = 3;
inline constexpr int kExitUsage = 64;

/// Runs one command line (args excludes the program name) and returns the
/// exit code. Normal output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qibla::cli
