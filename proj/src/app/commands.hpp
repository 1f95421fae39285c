#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "app/run_config.hpp"

namespace cajscc::app {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2 };

const std::vector<std::string>& command_names();

// Validates the configuration, runs one command and writes its artifacts plus
// resolved.cfg under out_dir. Configuration and usage problems return 1,
// failures during the run return 2; the message goes to `log`.
int run_command(const std::string& command, const RunConfig& config, const std::string& out_dir,
                std::ostream& log);

}  // namespace cajscc::app
