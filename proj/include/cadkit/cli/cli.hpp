#pragma once

#include <string>
#include <vector>

namespace cadkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs one command line (args[0] is the program name). Errors go to stderr
/// as a single line; the return value is the process exit code.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace cadkit::cli
