#pragma once

// Truncated Arbitrage Pricing Model.
//
// Asset 0 is riskless with zero return. Assets 1..m are the factor assets,
//   R_i = mu_i + beta_bar_i eps_i,
// and assets m+1..K load on the factors,
//   R_i = mu_i + sum_j beta_i^j eps_j + beta_bar_i eps_i.
// The drift is absorbed into the centered form R_i = ... (eps_j - b_j), after
// which every attainable payoff is V(phi) = sum_i phi_i (eps_i - b_i).

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "apm/distribution.hpp"

namespace apm {

enum class Verdict { holds, fails, undecided };

std::string_view to_string(Verdict v) noexcept;

/// Analytic description of b_i beyond the truncation level.
struct BRule {
  enum class Kind { none, explicit_list, power_decay, zero };
  Kind kind = Kind::none;
  std::vector<double> values;  // explicit_list
  double c = 0.0;              // power_decay: b_i = c * i^(-p)
  double p = 0.0;
};

struct ModelSpec {
  std::size_t m = 1;
  std::size_t K = 1;
  std::vector<double> mu;                 // K entries
  std::vector<std::vector<double>> beta;  // K - m rows of m loadings
  std::vector<double> beta_bar;           // K entries, all nonzero
  std::vector<DistributionSpec> noise;    // K entries
  BRule b_rule;
};

class MarketModel {
 public:
  [[nodiscard]] const ModelSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] std::size_t K() const noexcept { return spec_.K; }
  [[nodiscard]] std::size_t m() const noexcept { return spec_.m; }
  /// Centered drifts b_1..b_K (0-based storage).
  [[nodiscard]] std::span<const double> b() const noexcept { return b_; }
  /// sqrt(sum_{i<=K} b_i^2).
  [[nodiscard]] double M() const noexcept { return M_; }
  [[nodiscard]] const DistributionSpec& noise(std::size_t coordinate) const {
    return spec_.noise.at(coordinate);
  }
  /// Loading of asset `asset` (1-based, > m) on factor `factor` (1-based).
  [[nodiscard]] double loading(std::size_t asset, std::size_t factor) const;

  /// The same market restricted to the first `level` coordinates.
  [[nodiscard]] MarketModel truncated(std::size_t level) const;

 private:
  friend MarketModel build_market(ModelSpec spec);
  MarketModel(ModelSpec spec, std::vector<double> b, double M)
      : spec_(std::move(spec)), b_(std::move(b)), M_(M) {}

  ModelSpec spec_;
  std::vector<double> b_;
  double M_ = 0.0;
};

/// Dollar amounts psi_0..psi_k; must sum to zero.
struct AssetPortfolio {
  std::vector<double> psi;
};

/// Position sizes phi_1..phi_K in the centered coordinates.
struct FactorStrategy {
  std::vector<double> phi;
  [[nodiscard]] double norm() const noexcept;
};

/// Validates the spec and computes b and M.
/// Throws ModelError for beta_bar_i == 0, K < m, m == 0 or size mismatches.
MarketModel build_market(ModelSpec spec);

/// Convenience: m = K factor assets with beta_bar = 1 and mu = -b, so the
/// centered drifts are exactly `b`.
MarketModel market_from_drifts(std::vector<double> b,
                               std::vector<DistributionSpec> noise,
                               BRule rule = {});
MarketModel market_from_drifts(std::vector<double> b, const DistributionSpec& noise,
                               BRule rule = {});

/// The first `level` centered coordinates of `model` as a factor-only market
/// (same b and noise, so the same payoffs V(phi)).
MarketModel centered_view(const MarketModel& model, std::size_t level);

struct ReturnForms {
  double raw;       // mu_i + sum_j beta_i^j eps_j + beta_bar_i eps_i
  double centered;  // sum_j beta_i^j (eps_j - b_j) + beta_bar_i (eps_i - b_i)
};

/// Return of asset i (0..K, 0 riskless) for one noise realization.
/// Throws std::out_of_range for a bad index or a short eps.
ReturnForms asset_return(const MarketModel& model, std::size_t asset,
                         std::span<const double> eps);

/// Maps a budget-feasible asset portfolio to its factor strategy.
/// Throws ModelError when the budget constraint is violated.
FactorStrategy convert_portfolio(const MarketModel& model,
                                 const AssetPortfolio& portfolio);

/// Payoff of an asset portfolio, sum_i psi_i R_i (raw returns).
double asset_portfolio_value(const MarketModel& model,
                             const AssetPortfolio& portfolio,
                             std::span<const double> eps);

/// V(phi) = sum_i phi_i (eps_i - b_i).
double portfolio_value(const MarketModel& model, std::span<const double> phi,
                       std::span<const double> eps);

struct AssumptionBReport {
  Verdict verdict = Verdict::undecided;
  std::string reason;
  /// partial_sums[k] = sum_{i<=k+1} b_i^2 over the modeled coordinates.
  std::vector<double> partial_sums;
  /// Upper bound on sum_{i>K} b_i^2 from the rule; +inf when it diverges,
  /// NaN when the rule gives no information.
  double tail_bound = 0.0;
};

AssumptionBReport check_assumption_b(const MarketModel& model);

struct CoordinateNA {
  std::size_t coordinate = 0;  // 1-based
  double b = 0.0;
  double prob_below = 0.0;  // P(eps_i < b_i)
  double prob_above = 0.0;  // P(eps_i > b_i)
  [[nodiscard]] bool ok() const noexcept {
    return prob_below > 0.0 && prob_above > 0.0;
  }
};

struct NoArbitrageReport {
  std::vector<CoordinateNA> coordinates;
  std::vector<std::size_t> flagged;  // 1-based coordinates failing a tail
  [[nodiscard]] bool arbitrage_free() const noexcept { return flagged.empty(); }
};

NoArbitrageReport check_no_arbitrage(const MarketModel& model);

}  // namespace apm
