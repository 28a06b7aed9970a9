#pragma once

#include <ostream>

namespace pvvtt {

// Parses argv, runs the chosen subcommand and returns the process exit code:
// 0 success, 1 usage or validation failure, 2 I/O or transport failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace pvvtt
