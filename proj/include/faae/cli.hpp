#pragma once

#include <iosfwd>

namespace faae {

// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitData = 2,
    kExitNumerical = 3,
};

// Subcommands: train, reconstruct, generate, morph, eval, gradcheck.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace faae
