#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vcdd {

// Exit codes: 0 success, 1 domain or configuration error, 2 I/O error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitIo = 2;

// `args` excludes the program name. Subcommands: bound-eval (also "bound eval"),
// sweep-width, sweep-epochs, sweep-samples, dataset-prepare, audit-csv.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vcdd
