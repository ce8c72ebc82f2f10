#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tqa {

/// Command-line entry point. `args` excludes the program name.
/// Returns 0 on success, 1 on a user error, 2 on an internal error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tqa
