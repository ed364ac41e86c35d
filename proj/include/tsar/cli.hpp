#pragma once

#include <string>
#include <vector>

namespace tsar {

/// Runs the command-line front end (fit, predict, evaluate, kernel-dump,
/// synth). Returns the process exit code; errors print a single
/// "error: ..." line on stderr and yield a nonzero code.
int run_cli(const std::vector<std::string>& args);

}  // namespace tsar
