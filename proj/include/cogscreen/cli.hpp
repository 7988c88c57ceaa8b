#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cogscreen::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kInternal = 3 };

/// Runs one command line (args exclude the program name) and returns its exit
/// code. Diagnostics go to err; progress summaries to out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cogscreen::cli
