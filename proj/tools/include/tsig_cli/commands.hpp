#pragma once

#include <exception>
#include <string>
#include <vector>

#include "json.hpp"
#include "tsig_cli/config.hpp"

namespace tsig::cli {

struct CommandResult {
  std::string output;  // JSON document or CSV table
  int exit_code = 0;   // 0 success, 2 failed numerical assertion
};

const std::vector<std::string>& command_names();

// cfg may be null only for verify.
CommandResult run_command(const std::string& command, const RunConfig* cfg, unsigned seed);

// Machine-readable error object for stderr.
nlohmann::json error_object(const std::exception& e);

// Exit code for an exception escaping a command: 1 for validation, 2 otherwise.
int exit_code_for(const std::exception& e);

}  // namespace tsig::cli
