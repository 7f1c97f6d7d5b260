#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace conic_ke::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Runs one command line (without the program name). Returns the process exit code:
/// 0 success, 1 invalid input, 2 Newton divergence, 3 positivity loss, 4 stalled path,
/// 5 failed fit, 6 infeasible cover, 7 outside the valid domain.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace conic_ke::cli
