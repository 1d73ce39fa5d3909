#pragma once

#include <iosfwd>

namespace hdgeig {

/// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitConfig = 2, kExitNumerical = 3 };

/// Entry point shared by the executable and the tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hdgeig
