#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace wallaw {

/// Command-line entry point; `args` excludes the program name.
/// Exit codes: 0 success, 1 numerical failure, 2 invalid input. Files are
/// written only after the whole command has succeeded, and only below the
/// configured output directory.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wallaw
