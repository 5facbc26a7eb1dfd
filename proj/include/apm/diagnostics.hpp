#pragma once

// Checks of the analytic side conditions behind the existence results:
// exponential moments of V(phi), the Hoelder chain bounding E[u(V(phi)^+)],
// and the two competing assumption sets on the noise.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "apm/market.hpp"
#include "apm/risk_neutral.hpp"
#include "apm/scenarios.hpp"
#include "apm/utility.hpp"

namespace apm {

/// `count` strategies in R^dim: coordinates i.i.d. uniform on [-1, 1], then
/// rescaled to norm max_norm * U with U uniform on (0, 1). Seeded.
std::vector<FactorStrategy> random_strategies(std::size_t dim, std::size_t count,
                                              double max_norm, std::uint64_t seed);

struct SubGaussianReport {
  Verdict verdict = Verdict::undecided;
  /// Largest passing gamma; NaN when none passes.
  double gamma = 0.0;
  struct Row {
    double gamma;
    double sup_moment;  // max_i E[exp(gamma |eps_i|)]
  };
  std::vector<Row> scan;
};

/// gamma passes when max_i E[exp(gamma |eps_i|)] is finite.
SubGaussianReport check_subgaussian(const MarketModel& model,
                                    std::span<const double> gammas = {});

struct ExpMomentTrial {
  double delta = 0.0;
  double norm = 0.0;
  double value = 0.0;  // E[exp(|V0(phi)|)], V0 = sum phi_i eps_i
};

struct ExpMomentRow {
  double delta = 0.0;
  double sup_value = 0.0;
  double fitted_C = 0.0;
};

struct TailRow {
  double T = 0.0;
  double max_tail = 0.0;  // max over trials of E[Z^2 1{Z^2 > T}]
};

struct ExpUIReport {
  std::vector<ExpMomentRow> rows;
  std::vector<ExpMomentTrial> trials;
  std::vector<TailRow> tails;
  /// max over trials of ln(E / 2) / ||phi||^2, clamped at 0.
  double fitted_C = 0.0;
  /// Every trial satisfies E <= 2 exp(fitted_C ||phi||^2) (1 + 1e-9).
  bool within_bound = true;
  bool monte_carlo = false;
};

/// For each delta, `trials` random phi with ||phi|| <= delta; expectations
/// over `s` (exact when `s` is an enumeration).
ExpUIReport exp_ui_bound(const MarketModel& model, std::span<const double> deltas,
                         std::size_t trials, std::uint64_t seed,
                         const ScenarioSet& s, std::size_t workers = 1);

struct HolderConstants {
  double alpha = 0.0;
  double beta = 0.0;
  double C1 = 0.0;
  double C2 = 0.0;
  double C_prime = 1.0;         // (E[(dP/dQ)^{a/(1-a)}])^{1-a}
  double C_double_prime = 1.0;  // (E[(dQ/dP)^{b/(b-1)}])^{a(b-1)/b}
};

struct HolderRow {
  double norm = 0.0;
  double lhs = 0.0;        // E[u(Y+)]
  double lower_part = 0.0; // E[u(-Y-)]
  double rhs = 0.0;
  double margin = 0.0;     // rhs - lhs
};

struct HolderReport {
  HolderConstants constants;
  std::vector<HolderRow> rows;
  double min_margin = 0.0;
  double pricing_residual = 0.0;
  bool monte_carlo = false;
};

/// Both sides of
///   E[u(Y+)] <= C1 (C' C'' (-(1/C2) E[u(-Y-)] + 1)^{alpha/beta} + 1),
/// Y = V(phi), for every strategy. Throws ModelError when u has no growth
/// certificate.
HolderReport holder_chain_check(const MarketModel& model, const TiltedMeasure& q,
                                const Utility& u,
                                std::span<const FactorStrategy> strategies,
                                const ScenarioSet& s, std::size_t workers = 1);

/// sup_{t >= 0} [C1 (C' C'' (t + 1)^{alpha/beta} + 1) - C2 t] + |u(0)|, an upper
/// bound on E[u(V(phi))] over all strategies.
double value_cap(const HolderConstants& c, double u_at_zero);

struct RelevantReport {
  Verdict tails = Verdict::undecided;
  /// First grid x with inf_i P(eps_i > x) = 0 or inf_i P(eps_i < -x) = 0; NaN
  /// when none.
  double first_failing_x = 0.0;
  struct TailRow {
    double x;
    double inf_above;
    double inf_below;
  };
  std::vector<TailRow> tail_rows;
  Verdict uniform_integrability = Verdict::undecided;
  struct MomentRow {
    double N;
    double sup_truncated;  // max_i E[eps_i^2 1{|eps_i| >= N}]
  };
  std::vector<MomentRow> moment_rows;
};

RelevantReport check_assumption_relevant(const MarketModel& model,
                                         std::span<const double> x_grid = {},
                                         std::span<const double> n_grid = {});

struct AssumptionVerdicts {
  Verdict assumption_b = Verdict::undecided;
  Verdict novum_subgauss = Verdict::undecided;
  Verdict novum_na = Verdict::undecided;
  Verdict relevant_tails = Verdict::undecided;
  Verdict relevant_ui = Verdict::undecided;
};

struct CheckReport {
  AssumptionBReport assumption_b;
  NoArbitrageReport no_arbitrage;
  SubGaussianReport subgaussian;
  RelevantReport relevant;
  [[nodiscard]] AssumptionVerdicts verdicts() const;
};

CheckReport run_checks(const MarketModel& model);

}  // namespace apm
