#pragma once
// CLI entry points, kept in the library so tests can drive them directly.
// Exit codes: 0 success, 1 usage/config error, 2 runtime failure.

#include <string>
#include <vector>

namespace remnet::cli {

int run_cli(const std::vector<std::string>& args);

}  // namespace remnet::cli
