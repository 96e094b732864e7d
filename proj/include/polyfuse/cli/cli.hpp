#pragma once

#include <map>
#include <ostream>
#include <string>

namespace polyfuse::cli {

/// Runs the command line tool. `environment` supplies the POLYFUSE_* overrides
/// (POLYFUSE_ROOT and POLYFUSE_CONFIG name the root and config file).
/// Returns 0 on success, 2 for validation errors, 3 for media or feature
/// errors, 4 for training errors and 1 otherwise.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
            const std::map<std::string, std::string>& environment);

/// POLYFUSE_* variables of the current process.
std::map<std::string, std::string> process_environment();

}  // namespace polyfuse::cli
