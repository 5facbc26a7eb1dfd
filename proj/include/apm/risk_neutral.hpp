#pragma once

// Equivalent measures that remove every asset drift.
//
// Each coordinate i gets a density factor f_i(eps_i) with E[f_i] = 1 and
// E[f_i(eps_i) (eps_i - b_i)] = 0; by independence the product of the
// factors is a density dQ/dP under which every centered coordinate, hence
// every asset return and every V(phi), has mean zero.
//
// Two factor constructions are available:
//   logistic tilt   f(e) = psi(a (e - b)) / E[psi(a (eps - b))],
//                   psi(x) = 1/2 + 1/(1 + e^x), with a solved by bisection;
//   utility measure f(e) = u'(phi* (e - b)) / E[u'(phi* (eps - b))], where
//                   phi* maximizes E[u(phi (eps - b))] for the appendix
//                   power utility. Used when the tilt cannot be calibrated.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "apm/market.hpp"
#include "apm/optimizer.hpp"
#include "apm/scenarios.hpp"

namespace apm {

/// psi(x) = 1/2 + 1/(1 + e^x); values in (0.5, 1.5), psi(0) = 1.
double logistic_weight(double x) noexcept;

/// Thrown when eps - b is one-sided, so no drift-killing tilt exists.
class TiltError : public ModelError {
 public:
  using ModelError::ModelError;
};

struct TiltSolution {
  double a = 0.0;
  double residual = 0.0;  // g(a)
  bool converged = false;
  std::size_t iterations = 0;
};

/// g(a) = E[psi(a (eps - b)) (eps - b)].
double tilt_moment(const ScalarLaw& eps, double b, double a);

/// Bisection for g(a) = 0 on [-bracket, bracket]; g is strictly decreasing.
/// Throws TiltError when P(eps < b) or P(eps > b) is zero. Returns
/// converged = false when g keeps one sign on the bracket or |g| cannot be
/// pushed below `tolerance`.
TiltSolution solve_tilt(const ScalarLaw& eps, double b, double tolerance = 1e-12,
                        double bracket = 50.0);

enum class TiltMethod { logistic_tilt, meggy_fallback };
std::string_view to_string(TiltMethod m) noexcept;

struct CoordinateTilt {
  TiltMethod method = TiltMethod::logistic_tilt;
  double b = 0.0;
  double a = 0.0;           // logistic tilt parameter
  double z = 1.0;           // logistic normalizer E[psi(a (eps - b))]
  double phi_star = 0.0;    // utility measure maximizer
  double alpha = 0.5;       // utility measure exponent
  double normalizer = 1.0;  // utility measure E[u'(phi* (eps - b))]
  double residual = 0.0;    // E_Q[eps - b]

  /// Density factor at a noise value.
  [[nodiscard]] double factor(double eps) const;
};

class TiltedMeasure {
 public:
  explicit TiltedMeasure(std::vector<CoordinateTilt> coordinates)
      : coordinates_(std::move(coordinates)) {}

  [[nodiscard]] std::span<const CoordinateTilt> coordinates() const noexcept {
    return coordinates_;
  }
  [[nodiscard]] std::size_t size() const noexcept { return coordinates_.size(); }
  /// dQ/dP at a noise realization (product of coordinate factors).
  [[nodiscard]] double density(std::span<const double> eps) const;
  [[nodiscard]] double max_residual() const noexcept;

 private:
  std::vector<CoordinateTilt> coordinates_;
};

/// Logistic tilt per coordinate, utility-measure fallback where the tilt
/// does not converge. Throws ArbitrageError when a coordinate fails the
/// no-arbitrage tails.
TiltedMeasure build_tilted_measure(const MarketModel& model,
                                   double fallback_alpha = 0.5,
                                   double tolerance = 1e-12);

struct MomentRow {
  double w = 0.0;
  Estimate density_moment;     // E[(dQ/dP)^w]
  Estimate reciprocal_moment;  // E[(dP/dQ)^w]
};

struct MeasureReport {
  std::vector<MomentRow> moments;
  double max_pricing_residual = 0.0;
  /// |a_i| / |b_i| per logistic coordinate; NaN where b_i = 0 or the
  /// coordinate uses the fallback.
  std::vector<double> tilt_ratios;
  /// sum over coordinates of a_i^2 + b_i^2 (a_i = 0 for fallback ones).
  double tilt_energy = 0.0;
  /// Smallest c with log E[(dQ/dP)^w], log E[(dP/dQ)^w] <= c * tilt_energy.
  double fitted_c = 0.0;
  bool monte_carlo = false;
};

/// E[(dQ/dP)^w] and E[(dP/dQ)^w] over a scenario set.
MeasureReport measure_moments(const TiltedMeasure& q, const ScenarioSet& s,
                              std::span<const double> w_list,
                              std::size_t workers = 1);

/// Product-form moment prod_i E[f_i(eps_i)^w], computed coordinate by
/// coordinate from the model laws.
double product_moment(const TiltedMeasure& q, const MarketModel& model, double w);

struct SingleAssetMeasure {
  double phi_star = 0.0;
  double alpha = 0.5;
  double normalizer = 1.0;    // E[u'(phi* X)]
  double mean_under_w = 0.0;  // E_W[X]
  double density_bound = 0.0; // alpha / normalizer
  std::vector<double> atoms;    // support of X (discrete X only)
  std::vector<double> density;  // dW/dP at each atom
  std::vector<MomentRow> moments;

  [[nodiscard]] double density_at(double x) const;
};

/// W with dW/dP = u'(phi* X) / E[u'(phi* X)] for the appendix power utility
/// with exponent alpha. Throws NoInteriorMaximizerError for one-sided X.
SingleAssetMeasure single_asset_measure(const ScalarLaw& x, double alpha,
                                        std::span<const double> w_list = {});

struct PricingReport {
  std::vector<Estimate> asset_residuals;     // E_Q[R_i], i = 1..K
  std::vector<Estimate> strategy_residuals;  // E_Q[V(phi)]
  double max_abs_residual = 0.0;
  /// max |residual| / standard error over Monte Carlo entries (0 if exact).
  double max_standard_errors = 0.0;
};

PricingReport verify_pricing(const TiltedMeasure& q, const MarketModel& model,
                             std::span<const FactorStrategy> strategies,
                             const ScenarioSet& s, std::size_t workers = 1);

}  // namespace apm
