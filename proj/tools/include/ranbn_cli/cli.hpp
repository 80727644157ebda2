#pragma once

#include <ostream>

#include "ranbn/errors.hpp"

namespace ranbn::cli {

// Stable process exit codes.
enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kInfeasible = 2,
    kProvider = 3,
    kData = 4,
};

int exit_code_for(ErrorKind kind);

// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ranbn::cli
