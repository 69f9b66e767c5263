#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tbvar::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,    // bad flags, config, or input files
  kPrecondition = 3,   // data violates an operation's precondition
  kNumerical = 4,      // numerical breakdown
};

/// Runs the command line `args` (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace tbvar::cli
