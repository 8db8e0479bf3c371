#pragma once

#include <iostream>

namespace plsa::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kData = 2;
inline constexpr int kNumerical = 3;

// Runs the command line; never throws. Errors are reported on `err` as a
// single line  error: kind=<usage|data|numerical> code=<n> msg=<text>
int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace plsa::cli
