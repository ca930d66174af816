#pragma once

#include <atomic>
#include <iosfwd>
#include <string>
#include <vector>

namespace qevo::cli {

enum ExitCode : int { ok = 0, input_error = 1, runtime_error = 2, interrupted = 130 };

/// Set from a signal handler; an evolve run stops after the current
/// generation's checkpoint.
std::atomic<bool>& stop_flag();

/// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qevo::cli
