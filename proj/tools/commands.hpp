#pragma once

#include "config.hpp"

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mixkin::cli {

struct CommandResult {
    nlohmann::json report;
    bool pass = false;
};

const std::vector<std::string>& command_names();

// Runs one subcommand and writes its artifacts under out_dir (which must exist).
CommandResult run_command(const std::string& name, const RunConfig& cfg, const std::string& out_dir);

// Exit status for a library error kind: 2 for input problems, 3 for numerical ones.
int exit_code_for(const std::exception& e);
nlohmann::json error_json(const std::exception& e);

} // namespace mixkin::cli
