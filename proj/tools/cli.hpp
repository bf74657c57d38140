#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ctlasso::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Runs one command line (args excludes the program name). Results go to
/// `out` unless --out names a file; failures print one line to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace ctlasso::cli
