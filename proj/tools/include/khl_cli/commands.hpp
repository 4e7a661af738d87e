#pragma once

#include <iosfwd>

namespace khl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

/// Runs `khl <subcommand> ...`. Errors are written to `err` as one JSON line
/// {"error": kind, "message": text} and mapped to the exit codes above.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace khl::cli
