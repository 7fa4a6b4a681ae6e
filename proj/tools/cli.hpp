#ifndef BSKPD_TOOLS_CLI_HPP
#define BSKPD_TOOLS_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace bskpd::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kNumericalError = 3,
  kCheckFailed = 4,
};

// Runs one command line (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bskpd::cli

#endif  // BSKPD_TOOLS_CLI_HPP
