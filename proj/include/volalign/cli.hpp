#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace volalign::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitNumericalError = 3;

// Runs the command line `args` (args[0] is the program name). Errors are
// reported on `err` and mapped to exit codes: 2 for bad input, 3 for
// numerical failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace volalign::cli
