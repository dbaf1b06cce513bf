#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tsgcl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

/// Runs one `tsgcl` invocation in-process. `args` excludes the program name.
/// Returns the process exit code; never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tsgcl::cli
