// SPDX-License-Identifier: Apache-2.0

#ifndef GRIDMEND_TOOLS_CLI_HPP_
#define GRIDMEND_TOOLS_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace gridmend::cli {

enum ExitCode { kOk = 0, kRuntimeFailure = 1, kConfigFailure = 2 };

/// Runs one command line (without the program name). Normal output goes to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gridmend::cli

#endif  // GRIDMEND_TOOLS_CLI_HPP_
