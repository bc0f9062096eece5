#pragma once

namespace asq {

// Command-line entry point.  Exit codes: 0 success, 1 numerical failure
// (non-convergence or invalid results), 2 configuration or input errors.
int run_cli(int argc, char** argv);

}  // namespace asq
