#ifndef TWISTER_CLI_HPP
#define TWISTER_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace twister {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Entry point behind the `twister` executable. `args` excludes the program
// name. Primary output goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace twister

#endif  // TWISTER_CLI_HPP
