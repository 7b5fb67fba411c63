#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cliniseq::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitCompatibility = 3;
inline constexpr int kExitNumeric = 4;

// Runs one subcommand (preprocess, synth, train, eval, topics, latents, knn).
// args excludes the program name. A "--config FILE" of key=value lines
// supplies defaults for the subcommand's flags; flags on the command line
// win and unknown keys are rejected.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cliniseq::cli
