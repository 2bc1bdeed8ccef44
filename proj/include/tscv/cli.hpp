#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tscv {

/// Exit codes of run_command.
enum ExitCode : int { exit_ok = 0, exit_check_failed = 1, exit_usage = 2, exit_numeric = 3 };

/// Runs one command; `args` excludes the program name.
///   solve <file> [--out csv] [--tol x] [--max-iter n] [--y csv]
///   residual <file> --y csv [--lam0 x] [--lam x] [--out csv]
///   check <file> --y csv [--tol x] [--lam0 x] [--lam x]
///   dual <file> [--out file]
///   gen-scale --kind uniform|hz|q --start x --stop x [--n n] [--h x] [--q x] [--out file]
///   oracle <file> [--values n] [--lo x] [--hi x] [--slack x] [--out csv]
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tscv
