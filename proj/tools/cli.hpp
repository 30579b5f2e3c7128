#pragma once

#include <iosfwd>

namespace fpf::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,  // verify found a failing check, or an I/O error
  kConfig = 2,
  kPrecondition = 3,
  kRuntime = 4,
};

/// Entry point of `fpf-lab`; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fpf::cli
