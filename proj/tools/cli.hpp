#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "illum/error.hpp"

namespace illum::cli {

/// Stable process exit codes.
enum ExitCode : int {
  kOk = 0,
  kRuntimeError = 1,
  kConfigError = 2,
  kDataError = 3,
  kNumericError = 4,
};

int exit_code_for(ErrorCode code);

/// Looks up an environment variable; nullopt when unset.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Runs the command line `args` (args[0] is the program name). Data goes to
/// `out`, diagnostics to `err`. `env` defaults to the process environment.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env = {});

}  // namespace illum::cli
