#pragma once

// Experiment runs and their output bundle: report.json plus tables/*.csv.
// A bundle is a pure function of the config and the seed; the worker count
// only changes how fast it is produced.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "apm/config.hpp"

namespace apm {

enum class Command { check, optimize, measure, report };
std::string_view to_string(Command c) noexcept;
Command command_from_string(std::string_view name);

struct RunOptions {
  std::uint64_t seed = 0;
  /// "cli", "env", "config" or "default".
  std::string seed_source = "default";
  std::size_t workers = 1;
  /// Monte Carlo sample size override; switches the run to Monte Carlo.
  std::optional<std::size_t> scenarios;
};

struct Bundle {
  nlohmann::ordered_json report;
  /// (file stem, CSV text), written as tables/<stem>.csv.
  std::vector<std::pair<std::string, std::string>> tables;
};

struct RunOutcome {
  int exit_code = 0;  // 0 ok, 2 assumption failure
  Bundle bundle;
  std::vector<std::string> failures;
};

/// Runs a command. Assumption failures (no-arbitrage, divergent sum of b^2)
/// give exit code 2 with the witness in the report; other errors throw.
RunOutcome run_command(Command cmd, const ExperimentConfig& cfg,
                       const RunOptions& options);

/// Writes report.json and tables/*.csv under `dir`. Throws std::runtime_error
/// on I/O failure.
void emit_report(const Bundle& bundle, const std::filesystem::path& dir);

}  // namespace apm
