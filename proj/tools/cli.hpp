#pragma once

#include <ostream>

namespace tdsr::app {

enum ExitCode { exit_ok = 0, exit_config = 2, exit_solver = 3, exit_io = 4 };

/// Entry point of the command-line tool; returns the process exit code.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tdsr::app
