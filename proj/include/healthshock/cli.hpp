#pragma once

#include <ostream>

namespace healthshock {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;  // verification, dominance or computation failure
inline constexpr int kExitUsage = 2;        // bad flags, config or input files

/// Entry point of the `healthshock` tool: solve | simulate | verify | calibrate | sweep.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace healthshock
