#pragma once

// The `hyperpp` command line: train, gradcheck, boundcheck, diagnose.
//
// Exit codes: 0 success, 1 check or training failure, 2 usage or config error.

#include <iosfwd>
#include <string>
#include <vector>

namespace hyperpp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hyperpp
