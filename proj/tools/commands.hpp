#pragma once

#include <string>
#include <vector>

namespace itosr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitCheckFailed = 3;

inline constexpr const char* kToolVersion = "1.0.0";

// Parses argv and dispatches to synth, run, eval or gan-check.
int main_dispatch(int argc, char** argv);

}  // namespace itosr::cli
