#pragma once

#include <string>
#include <vector>

#include "CLI11.hpp"

namespace gprllm::cli {

/// Registers every subcommand on app. Each subcommand's callback sets
/// exit_code when it finishes.
void register_commands(CLI::App& app, int& exit_code);

/// Replaces `--config FILE` after a subcommand with the file's entries as
/// `--key=value` arguments. Keys already given on the command line are
/// dropped so the flags override the file. args excludes the program name.
std::vector<std::string> expand_config(const CLI::App& app, std::vector<std::string> args);

}  // namespace gprllm::cli
