#pragma once

#include <string>
#include <vector>

namespace pbpm::cli {

/// Dispatches one CLI invocation (argv without the program name).
/// Returns 0 on success, 1 on a stage failure, 2 on a usage error.
int run_command(const std::vector<std::string>& args);

}  // namespace pbpm::cli
