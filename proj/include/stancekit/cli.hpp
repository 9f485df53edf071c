#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace stancekit {

/// Exit statuses of the command-line tool.
enum ExitCode : int { exit_ok = 0, exit_usage = 2, exit_data = 3, exit_backend = 4 };

/// Runs one subcommand (stats, augment, train, predict, prompt, ensemble,
/// evaluate, report). `args` excludes the program name. Failures print one
/// JSON object on `err` and return the matching exit code.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace stancekit
