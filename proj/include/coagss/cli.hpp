#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace coagss {

enum ExitCode : int { exit_ok = 0, exit_check_failed = 1, exit_config = 2, exit_numerical = 3 };

struct SelfCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Built-in oracle checks that need no input files.
std::vector<SelfCheck> run_selftest(int workers = 1);

/// Entry point of the command-line tool; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace coagss
