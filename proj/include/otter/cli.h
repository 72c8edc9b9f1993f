#ifndef OTTER_CLI_H_
#define OTTER_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace otter {

// Runs the command line with `args` excluding the program name. Returns 0 on
// success, 1 on validation or I/O failure, 2 on a usage error. Failures are
// printed to `err` as a single line starting with "error:".
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace otter

#endif  // OTTER_CLI_H_
