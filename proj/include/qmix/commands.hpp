#pragma once

#include <iosfwd>
#include <string>

#include "qmix/config.hpp"

namespace qmix {

enum ExitCode { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitRefused = 4 };

struct CommandOptions {
    bool force = false;
    std::string output_dir;  // overrides the config when non-empty
};

int cmd_penrose(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log);
int cmd_linear(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log);
int cmd_simulate(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log);
int cmd_sweep_hbar(const RunConfig& cfg, const CommandOptions& opt, std::ostream& log);

// Loads the config, dispatches, and maps errors to exit codes.
int run_command(const std::string& command, const std::string& config_path, const CommandOptions& opt,
                std::ostream& log);

// 17 significant digits.
std::string format_number(double x);
// Joins vector components with 'x' for file names, e.g. "0.5x0x0".
std::string mode_label(const Vec& k);

}  // namespace qmix
