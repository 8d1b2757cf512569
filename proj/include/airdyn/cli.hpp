#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace airdyn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputEnv = "AIRDYN_OUT";

/// Parses and executes one subcommand; errors are reported on `err` as a
/// single JSON line and mapped onto the exit codes above.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace airdyn::cli
