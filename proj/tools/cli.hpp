#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace heisen::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;

/// Runs `heisen <args...>` (args exclude the program name). Reports, CSV
/// files and voxel dumps go under --out; a one-line summary per pipeline goes
/// to out, diagnostics to err. Returns 0 on pass, 1 on a failed check or a
/// module error, 2 on a usage or configuration error.
int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace heisen::cli
