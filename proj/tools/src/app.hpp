#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ionbell::cli {

/// Parses the command line and runs the chosen subcommand. Returns the exit status:
/// 0 success, 1 other failure, 2 configuration or input parse error,
/// 3 invariant violation, 4 estimator non-convergence.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ionbell::cli
