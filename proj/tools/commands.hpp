// Command dispatch: each command writes its CSV files into the output directory and returns the
// summary with its acceptance verdicts.
#ifndef MFL_TOOLS_COMMANDS_HPP
#define MFL_TOOLS_COMMANDS_HPP

#include "config.hpp"
#include "report.hpp"

#include <filesystem>

namespace mfl::cli {

Summary run_command(const ExperimentConfig& c, const std::filesystem::path& out);

}  // namespace mfl::cli

#endif
