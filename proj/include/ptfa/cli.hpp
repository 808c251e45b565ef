#pragma once

// Command-line front end: `fit`, `simulate` and `forecast` subcommands.
// Exit codes: 0 success (fit: converged), 2 fit stopped at max-iter, 1 error.

#include <iosfwd>

namespace ptfa::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitMaxIter = 2;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ptfa::cli
