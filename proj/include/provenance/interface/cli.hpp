#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace provenance {

/// Exit codes: 0 success, 1 pipeline or data error, 2 usage or configuration error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs the `provenance` command line (check, eval, roc, convert, serve).
/// `args` excludes the program name. `env` replaces getenv for PROVENANCE_* lookups.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const std::function<std::optional<std::string>(const std::string&)>& env = {});

}  // namespace provenance
