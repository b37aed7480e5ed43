#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace optisynth {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1; // domain failure
inline constexpr int kExitUsage = 2;

/// Command-line entry point without the program name:
///   generate | solve | run-agent | evaluate | audit | export-sft
/// Each subcommand accepts --seed, --config, --workers and --out. A config
/// file holds `key = value` lines naming long options of the subcommand;
/// flags given on the command line take precedence.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace optisynth
