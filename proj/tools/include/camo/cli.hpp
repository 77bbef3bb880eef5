#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace camo {

/// Process exit codes of the camopatch tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitMissingInput = 3,
  kExitValidation = 4,
  kExitIo = 5,
  kExitDiverged = 6,
};

/// Runs one camopatch invocation. `args` excludes the program name.
/// Progress goes to `out`; failures print a single line
/// `error: kind=<kind> message="<text>"` to `err`.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace camo
