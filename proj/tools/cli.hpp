#pragma once

// Command-line front end. `run` is the whole program minus process setup, so
// tests can drive it in-process.

#include <iosfwd>
#include <string>
#include <vector>

namespace qchaos::cli {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kOutDirEnv = "QCHAOS_OUT_DIR";

enum ExitCode : int { ok = 0, io_failure = 1, invalid = 2, numerical = 3 };

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qchaos::cli
