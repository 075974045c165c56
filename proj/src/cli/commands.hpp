#pragma once

namespace mcx {

// Builds the CLI, parses argv, dispatches.  Exit codes: 0 ok, 1 usage,
// 2 numeric failure, 3 acceptance-comparison failure.  Library exceptions
// propagate to main for the code mapping.
int run_cli(int argc, char** argv);

}  // namespace mcx
