#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mgal::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// args[0] is the program name. Failures print one JSON line
/// {"error": kind, "message": ...} to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace mgal::cli
