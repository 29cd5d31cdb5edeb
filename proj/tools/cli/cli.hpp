#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pulsecancel::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2 };

/// Runs one subcommand. `args` excludes the program name. Data goes to `out`
/// (or files), diagnostics to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int dispatch(int argc, char** argv);

}  // namespace pulsecancel::cli
