#pragma once

#include <string>
#include <vector>

namespace vageo::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 1, kValidation = 2, kRuntime = 3 };

// Entry point shared by the vageo binary and the tests.
int run(const std::vector<std::string>& args);

}  // namespace vageo::cli
