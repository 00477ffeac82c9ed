#pragma once

#include <string>
#include <vector>

namespace tactile {

// Full command-line entry point (args exclude the program name). Returns the
// process exit code: 0 success, 2 bad configuration or usage, 1 runtime
// failure. Errors print one line to stderr: error: code=N msg="...".
int run_cli(const std::vector<std::string>& args);

}  // namespace tactile
