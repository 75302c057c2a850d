#pragma once

#include <string>
#include <vector>

namespace trajkit::cli {

enum ExitCode : int { kOk = 0, kError = 1, kPartial = 2 };

/// Parses and runs one command line (without the program name).
int run(const std::vector<std::string>& args);

}  // namespace trajkit::cli
