#pragma once

#include <iosfwd>

namespace ftfer::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kNumerical = 2, kConsistency = 3 };

// Entry point of the ftfer tool; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ftfer::cli
