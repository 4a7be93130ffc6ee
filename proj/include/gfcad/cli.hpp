#pragma once

#include <string>
#include <vector>

namespace gfcad {

// full command-line entry point; returns the process exit code
// (0 ok, 1 validation/parse failure, 2 I/O failure, 3 numeric failure)
int run_cli(const std::vector<std::string>& args);

}  // namespace gfcad
