#pragma once

#include <string>
#include <vector>

#include "bow/config.hpp"

namespace bow {

// Extra positional inputs for subcommands that need them (inspect-reward).
struct DispatchArgs {
    std::string context_text;
    std::string trajectory_text;
    std::string gold_word;
};

// Runs one subcommand: prepare | train | eval | inspect-reward. Throws on
// failure; the CLI turns that into a one-line diagnostic and nonzero exit.
int dispatch(const std::string& command, const RunConfig& cfg, const DispatchArgs& args = {});

}  // namespace bow
