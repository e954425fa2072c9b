#pragma once

// Command-line front end: synth | prepare | train | crossval | sample.

#include <iosfwd>
#include <string>
#include <vector>

namespace trajgan {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitData = 3, kExitNumeric = 4 };

// Parses and runs one command. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace trajgan
