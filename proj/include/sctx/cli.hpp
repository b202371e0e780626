#pragma once

#include <iosfwd>

namespace sctx {

/// Exit codes: 0 success, 1 domain failure (verification or experiment), 2 input error.
enum ExitCode : int { exit_ok = 0, exit_failure = 1, exit_input_error = 2 };

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sctx
