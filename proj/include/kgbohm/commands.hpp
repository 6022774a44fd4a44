#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgbohm/config.hpp"
#include "kgbohm/error.hpp"

namespace kgbohm {

enum ExitCode : int {
    ExitOk = 0,
    ExitCheckFailed = 1,
    ExitConfig = 2,
    ExitStartNode = 3,
    ExitInitialDensity = 4,
    ExitUnresolved = 5,
};

struct CommandOptions {
    std::filesystem::path out_dir{"."};
    /// Overrides the ensemble seed.
    std::optional<std::uint64_t> seed;
    /// 0 selects resolve_threads(0).
    std::size_t threads = 0;
    /// simulate: replaces the configured start points when nonempty.
    std::vector<Configuration> starts;
};

/// One CSV per start (trajectory_NNN.csv) and manifest.json.
int cmd_simulate(const ScenarioConfig& config, const CommandOptions& options, std::ostream& log);
/// partition.csv, rho_grid.csv and summary.json.
int cmd_classify(const ScenarioConfig& config, const CommandOptions& options, std::ostream& log);
/// histogram.csv, comparison.json and manifest.json. Only the manifest holds
/// timestamps, run times and the thread count.
int cmd_ensemble(const ScenarioConfig& config, const CommandOptions& options, std::ostream& log);
/// report.json; returns ExitCheckFailed unless every check passes.
int cmd_verify(const ScenarioConfig& config, const CommandOptions& options, std::ostream& log);

int exit_code_for(const Error& e);

/// Loads `config` (file or builtin name), runs the command and maps library
/// errors to exit codes, printing diagnostics to `err`.
int run_command(std::string_view command, const std::string& config,
                const CommandOptions& options, std::ostream& out, std::ostream& err);

/// Locale-independent, 17 significant digits.
std::string format_real(double v);

/// Parses "t,x,y,z" groups separated by ';' into one configuration.
Configuration parse_start(std::string_view text);

}  // namespace kgbohm
