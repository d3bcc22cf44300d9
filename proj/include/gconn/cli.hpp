#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gconn {

// Command-line entry point; `args` excludes the program name.
// Returns 0 when every check passes, 1 on check failure, 2 on configuration
// errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gconn
