#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "apm/market.hpp"
#include "apm/optimizer.hpp"
#include "apm/utility.hpp"

namespace apm {

/// Every problem found in a config file, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  [[nodiscard]] const std::vector<std::string>& violations() const noexcept {
    return violations_;
  }

 private:
  std::vector<std::string> violations_;
};

struct MeasureConfig {
  double fallback_alpha = 0.5;
  double p = 2.0;
  /// Empty means {-2, -1, 1, 2, -p, p}.
  std::vector<double> exponents;

  [[nodiscard]] std::vector<double> moment_exponents() const;
};

struct DiagnosticsConfig {
  std::vector<double> deltas{0.25, 0.5, 1.0};
  std::size_t trials = 100;
  std::size_t strategies = 100;
  double strategy_norm = 1.0;
  std::vector<double> x_grid;  // empty: library default
  std::vector<double> n_grid;
};

struct ExperimentConfig {
  std::filesystem::path source;
  ModelSpec model;
  Utility utility = Utility::appendix_power(0.5);
  /// Result of checking the declared growth block, when one is given.
  std::optional<GrowthVerdict> growth;
  SolverConfig solver;
  MeasureConfig measure;
  ScenarioPolicy scenarios;
  bool seed_in_config = false;
  DiagnosticsConfig diagnostics;
  std::filesystem::path out_dir = "out";
};

/// Reads a JSON config. The model is either an inline object under "model"
/// or a path to a JSON file, resolved relative to the config's directory.
/// Throws ConfigError listing every violation.
ExperimentConfig parse_config(const std::filesystem::path& path);

/// Same, from text; relative model paths resolve against `base_dir`.
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::filesystem::path& base_dir);

}  // namespace apm
