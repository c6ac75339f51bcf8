#pragma once

#include "obcov/error.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace obcov {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitIo = 3,
    kExitNumeric = 4,
};

int exit_code_for(Errc code) noexcept;

/// Entry point of the `obcov` tool; args[0] is the program name. Writes
/// human-readable output to `out` and diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace obcov
