#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mpdiag::cli {

/// Runs the command-line interface. Returns the process exit code
/// (0 ok, 2 configuration error, 3 data error, 4 numerical failure).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mpdiag::cli
