#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace twosettle::cli {

// Runs the command line (args excludes the program name). Data goes to `out`
// (or the --out file), diagnostics to `err`. Returns the process exit code:
// 0 success, 1 a verification failed, 2 usage or input error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace twosettle::cli
