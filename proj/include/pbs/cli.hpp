#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace pbs {

/// Entry point behind the `pbs` executable. args[0] is the program name.
/// Returns the process exit code; diagnostics go to `err`.
int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace pbs
