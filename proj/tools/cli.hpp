#ifndef MARKOV_PANEL_TOOLS_CLI_HPP
#define MARKOV_PANEL_TOOLS_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace markov_panel::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitDegenerate = 3;

/// Environment variable holding the default seed.
inline constexpr const char *kSeedEnv = "MARKOV_PANEL_SEED";

/// Entry point shared by the executable and the tests. Machine-readable output
/// goes to `out`, diagnostics to `err`. Returns the process exit code.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace markov_panel::cli

#endif
