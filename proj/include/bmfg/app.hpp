#pragma once

// Command dispatch shared by the C API and the command-line driver.

#include "bmfg/config.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace bmfg {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,      // I/O or unexpected errors
    kExitConfig = 2,       // invalid configuration or input files
    kExitNumerical = 3,    // solver failure, explosion, blow-up, singularity
    kExitUnconverged = 4,  // results written but the fixed point was not reached
};

const char* version();

struct RunResult {
    int exit_code = kExitOk;
    std::vector<std::string> files;  // written, relative to the output directory
};

/// Runs cfg.command() writing into `out_dir` (created if needed). Results go
/// to `out`, diagnostics to `err`. A manifest.txt listing every resolved
/// parameter is written whenever the command produced outputs.
RunResult run_experiment(const config::ExperimentConfig& cfg, const std::string& out_dir, std::ostream& out,
                         std::ostream& err);

} // namespace bmfg
