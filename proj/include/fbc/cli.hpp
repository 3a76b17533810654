#pragma once

#include <iosfwd>

namespace fbc {

/// Runs the command line. Results go to `out`, diagnostics to `err`.
/// Returns the process exit status: 0 success, 1 invalid input or usage,
/// 2 infeasible or islanded.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fbc
