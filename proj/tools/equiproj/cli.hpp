#pragma once

#include <ostream>

namespace equiproj::cli {

/// Exit codes of the equiproj command.
enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kIo = 3,
  kDomain = 4,
};

/// Runs the command line. Normal output goes to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

}  // namespace equiproj::cli
