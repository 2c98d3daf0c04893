#pragma once

// Command-line front end: subcommands device, mech, energy, circuit, sweep and
// reproduce. Results go to CSV files in the output directory plus a text
// summary on stdout.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ipop/config.hpp"

namespace ipop::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitValidation = 1,
    kExitNumerical = 2,
    kExitIo = 3,
};

[[nodiscard]] const std::vector<std::string>& subcommands();

/// Runs one subcommand and returns the summary text. Throws the library
/// error types; files are written into out_dir.
std::string run_subcommand(const std::string& subcommand, const config::RunConfig& config,
                           const std::filesystem::path& out_dir);

/// Full entry point: argument parsing, config loading, error mapping and the
/// machine-readable error file (out_dir/error.json).
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ipop::cli
