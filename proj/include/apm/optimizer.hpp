#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "apm/market.hpp"
#include "apm/scenarios.hpp"
#include "apm/utility.hpp"

namespace apm {

/// The market admits a nonnegative, somewhere-positive payoff.
class ArbitrageError : public std::runtime_error {
 public:
  ArbitrageError(const std::string& what, std::vector<double> witness)
      : std::runtime_error(what), witness_(std::move(witness)) {}
  [[nodiscard]] const std::vector<double>& witness() const noexcept {
    return witness_;
  }

 private:
  std::vector<double> witness_;
};

/// Single-asset problem lacks an interior maximizer (X is one-sided).
class NoInteriorMaximizerError : public ModelError {
 public:
  using ModelError::ModelError;
};

struct SolverConfig {
  double gradient_tolerance = 1e-8;
  std::size_t max_iterations = 10'000;
  double initial_step = 1.0;
  double shrink = 0.5;
  double armijo = 1e-4;
  std::vector<std::size_t> ladder{1, 2, 4, 8};
  /// Random directions tried by detect_unbounded after the exact checks.
  std::size_t direction_budget = 256;
  std::size_t workers = 1;

  void validate() const;
};

struct SingleAssetResult {
  double phi_star = 0.0;
  double value = 0.0;       // E[u(phi* X)]
  double derivative = 0.0;  // d/dphi E[u(phi X)] at phi*
};

/// Maximizes phi -> E[u(phi X)] over the real line by bisection on the
/// (nonincreasing) derivative. Throws NoInteriorMaximizerError unless
/// P(X > 0) > 0 and P(X < 0) > 0.
SingleAssetResult optimize_single_asset(const ScalarLaw& x, const Utility& u);

struct UnboundedReport {
  bool found = false;
  std::vector<double> direction;  // unit-norm witness when found
  std::string method;             // "coordinate", "lp", "random" or "none"
  /// E[u(t V(direction))] for t = 1, 10, 100: strictly increasing in t for
  /// strictly increasing u, so the supremum is not attained.
  std::vector<double> witness_values;
};

/// Looks for phi with V(phi) >= 0 on every charged scenario and > 0 on one.
/// Coordinate directions first, then an exact LP when the scenario set is
/// small enough, then `direction_budget` seeded random directions.
/// A negative result is "none found", not a proof of no-arbitrage.
UnboundedReport detect_unbounded(const MarketModel& model, const Utility& u,
                                 const ScenarioSet& s,
                                 std::size_t direction_budget);

struct TruncatedResult {
  std::size_t level = 0;
  FactorStrategy phi_star;
  double value = 0.0;
  double value_standard_error = 0.0;
  double gradient_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  UnboundedReport unbounded;
};

/// SAA objective and gradient at phi over the first phi.size() coordinates.
struct ObjectiveValue {
  double value = 0.0;
  std::vector<double> gradient;
};
ObjectiveValue saa_objective(const MarketModel& model, const Utility& u,
                             const ScenarioSet& s, std::span<const double> phi,
                             std::size_t workers = 1);

/// Gradient ascent with Armijo backtracking from phi = 0 on the scenario
/// expectation of u(V(phi)), phi in R^level.
/// Throws ArbitrageError when a coordinate fails the no-arbitrage tails.
/// A scenario-level arbitrage is reported in `unbounded` and no phi* is
/// returned.
TruncatedResult optimize_truncated(const MarketModel& model, const Utility& u,
                                   std::size_t level, const ScenarioSet& s,
                                   const SolverConfig& cfg);

struct ScenarioPolicy {
  enum class Mode { exact, monte_carlo };
  Mode mode = Mode::exact;
  std::size_t n = 100'000;
  std::uint64_t seed = 0;
  std::size_t cap = kDefaultEnumerationCap;
  /// In exact mode, sample n rows with `seed` when enumeration is impossible
  /// (the provenance then says monte_carlo).
  bool fallback_to_monte_carlo = true;
};

/// Scenario set for a model under a policy. Monte Carlo draws are addressed
/// by (seed, row, coordinate), so truncations share their common columns.
ScenarioSet make_scenarios(const MarketModel& model, const ScenarioPolicy& policy,
                           std::size_t workers = 1);

struct LevelReport {
  TruncatedResult result;
  /// ||phi*_K - phi*_{K'}|| against the previous level (zero padded), NaN for
  /// the first level.
  double diff_norm = 0.0;
};

struct OptimizationReport {
  std::vector<LevelReport> levels;
  /// v_K nondecreasing within 1e-8 across converged levels.
  bool monotone = true;
};

OptimizationReport truncation_ladder(const MarketModel& model, const Utility& u,
                                     const SolverConfig& cfg,
                                     const ScenarioPolicy& policy);

}  // namespace apm
