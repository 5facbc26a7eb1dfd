#include "apm/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "apm/feasibility.hpp"
#include "apm/numerics.hpp"
#include "apm/philox.hpp"

namespace apm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Scenario sets above this size skip the exact LP search.
constexpr std::size_t kLpRowCap = 512;
constexpr std::uint64_t kDirectionSeed = 0x5eed'd1ec'7105ULL;

double single_asset_slope(const ScalarLaw& x, const Utility& u, double phi) {
  std::vector<double> breaks;
  if (phi != 0.0) {
    for (double k : u.kinks()) breaks.push_back(k / phi);
  }
  return x.expect([&](double v) { return u.derivative(phi * v) * v; }, breaks);
}

double single_asset_value(const ScalarLaw& x, const Utility& u, double phi) {
  std::vector<double> breaks;
  if (phi != 0.0) {
    for (double k : u.kinks()) breaks.push_back(k / phi);
  }
  return x.expect([&](double v) { return u.value(phi * v); }, breaks);
}

}  // namespace

void SolverConfig::validate() const {
  if (!(gradient_tolerance > 0.0)) {
    throw ModelError("solver gradient tolerance must be positive");
  }
  if (!(shrink > 0.0 && shrink < 1.0)) {
    throw ModelError("line-search shrink factor must lie in (0, 1)");
  }
  if (!(initial_step > 0.0)) throw ModelError("initial step must be positive");
  if (max_iterations == 0) throw ModelError("max iterations must be positive");
  if (!(armijo > 0.0 && armijo < 1.0)) {
    throw ModelError("Armijo constant must lie in (0, 1)");
  }
  if (ladder.empty()) throw ModelError("ladder needs at least one level");
  for (std::size_t k : ladder) {
    if (k == 0) throw ModelError("ladder levels must be positive");
  }
}

SingleAssetResult optimize_single_asset(const ScalarLaw& x, const Utility& u) {
  if (!(x.prob_above(0.0) > 0.0) || !(x.prob_below(0.0) > 0.0)) {
    throw NoInteriorMaximizerError(
        "no interior maximizer guaranteed: X must take both signs");
  }
  auto slope = [&](double phi) { return single_asset_slope(x, u, phi); };

  SingleAssetResult result;
  const double at_zero = slope(0.0);
  if (at_zero == 0.0) {
    result.phi_star = 0.0;
  } else {
    // The slope is nonincreasing; walk out until it changes sign.
    const double dir = at_zero > 0.0 ? 1.0 : -1.0;
    double inner = 0.0;
    double outer = dir;
    int doublings = 0;
    while (slope(outer) * dir > 0.0) {
      inner = outer;
      outer *= 2.0;
      if (++doublings > 1000) {
        throw NoInteriorMaximizerError("single-asset objective has no maximizer");
      }
    }
    double lo = std::min(inner, outer);
    double hi = std::max(inner, outer);
    // slope(lo) > 0 >= slope(hi), up to the sign convention above.
    for (int it = 0; it < 2000; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double s = slope(mid);
      if (s == 0.0) {
        lo = hi = mid;
        break;
      }
      if (s > 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const double s_lo = std::abs(slope(lo));
    const double s_hi = std::abs(slope(hi));
    result.phi_star = s_lo <= s_hi ? lo : hi;
  }
  result.derivative = slope(result.phi_star);
  result.value = single_asset_value(x, u, result.phi_star);
  return result;
}

UnboundedReport detect_unbounded(const MarketModel& model, const Utility& u,
                                 const ScenarioSet& s,
                                 std::size_t direction_budget) {
  const std::size_t K = model.K();
  if (s.dim() < K) throw ModelError("scenario set narrower than the model");
  const auto b = model.b();

  // Centered payoffs on charged scenarios only.
  std::vector<double> rows;
  std::vector<double> charged_weights;
  for (std::size_t r = 0; r < s.size(); ++r) {
    if (s.weights()[r] <= 0.0) continue;
    const auto eps = s.row(r);
    for (std::size_t i = 0; i < K; ++i) rows.push_back(eps[i] - b[i]);
    charged_weights.push_back(s.weights()[r]);
  }
  const std::size_t n = charged_weights.size();

  auto is_arbitrage = [&](std::span<const double> phi) {
    bool positive = false;
    double scale = l2_norm(phi);
    if (scale == 0.0) return false;
    for (std::size_t r = 0; r < n; ++r) {
      double v = 0.0;
      for (std::size_t i = 0; i < K; ++i) v += phi[i] * rows[r * K + i];
      if (v < -1e-12 * scale) return false;
      if (v > 1e-9 * scale) positive = true;
    }
    return positive;
  };

  UnboundedReport report;
  auto accept = [&](std::vector<double> phi, const char* method) {
    const double norm = l2_norm(phi);
    for (double& x : phi) x /= norm;
    report.found = true;
    report.method = method;
    for (double t : {1.0, 10.0, 100.0}) {
      CompensatedSum acc;
      for (std::size_t r = 0; r < n; ++r) {
        double v = 0.0;
        for (std::size_t i = 0; i < K; ++i) v += t * phi[i] * rows[r * K + i];
        acc.add(charged_weights[r] * u.value(v));
      }
      report.witness_values.push_back(acc.value());
    }
    report.direction = std::move(phi);
  };

  for (std::size_t i = 0; i < K; ++i) {
    for (double sign : {1.0, -1.0}) {
      std::vector<double> phi(K, 0.0);
      phi[i] = sign;
      if (is_arbitrage(phi)) {
        accept(std::move(phi), "coordinate");
        return report;
      }
    }
  }

  if (n <= kLpRowCap) {
    if (auto phi = find_nonnegative_payoff(rows, n, K); phi && is_arbitrage(*phi)) {
      accept(std::move(*phi), "lp");
      return report;
    }
    // The LP is exact: no further search is informative.
    report.method = "none";
    return report;
  }

  for (std::size_t d = 0; d < direction_budget; ++d) {
    std::vector<double> phi(K);
    for (std::size_t i = 0; i < K; ++i) {
      phi[i] = 2.0 * Philox4x32::uniform(kDirectionSeed, d, i) - 1.0;
    }
    if (is_arbitrage(phi)) {
      accept(std::move(phi), "random");
      return report;
    }
  }
  report.method = "none";
  return report;
}

ObjectiveValue saa_objective(const MarketModel& model, const Utility& u,
                             const ScenarioSet& s, std::span<const double> phi,
                             std::size_t workers) {
  const std::size_t K = phi.size();
  const auto b = model.b();
  const auto w = s.weights();
  const auto sums = deterministic_vector_sum(
      s.size(), K + 1, workers, [&](std::size_t r, std::span<double> out) {
        const auto eps = s.row(r);
        double v = 0.0;
        for (std::size_t i = 0; i < K; ++i) v += phi[i] * (eps[i] - b[i]);
        out[0] = w[r] * u.value(v);
        const double slope = w[r] * u.derivative(v);
        for (std::size_t i = 0; i < K; ++i) out[i + 1] = slope * (eps[i] - b[i]);
      });
  ObjectiveValue result;
  result.value = sums[0];
  result.gradient.assign(sums.begin() + 1, sums.end());
  return result;
}

TruncatedResult optimize_truncated(const MarketModel& model, const Utility& u,
                                   std::size_t level, const ScenarioSet& s,
                                   const SolverConfig& cfg) {
  cfg.validate();
  if (level == 0 || level > model.K()) {
    throw ModelError("truncation level must lie in [1, K]");
  }
  if (s.dim() < level) throw ModelError("scenario set narrower than the level");
  const MarketModel view = centered_view(model, level);

  const auto na = check_no_arbitrage(view);
  if (!na.arbitrage_free()) {
    const std::size_t c = na.flagged.front();
    const auto& coord = na.coordinates[c - 1];
    std::vector<double> witness(level, 0.0);
    witness[c - 1] = coord.prob_below == 0.0 ? 1.0 : -1.0;
    throw ArbitrageError("coordinate " + std::to_string(c) +
                             " violates no-arbitrage: one tail of eps - b is empty",
                         std::move(witness));
  }

  TruncatedResult result;
  result.level = level;
  result.unbounded = detect_unbounded(view, u, s, cfg.direction_budget);
  if (result.unbounded.found) {
    result.phi_star.phi.clear();
    result.value = kNaN;
    result.gradient_norm = kNaN;
    return result;
  }

  std::vector<double> phi(level, 0.0);
  ObjectiveValue current = saa_objective(model, u, s, phi, cfg.workers);
  std::vector<double> prev_phi;
  std::vector<double> prev_grad;
  std::size_t iter = 0;
  for (; iter < cfg.max_iterations; ++iter) {
    const double gnorm = l2_norm(current.gradient);
    if (gnorm <= cfg.gradient_tolerance) {
      result.converged = true;
      break;
    }
    // Barzilai-Borwein trial step, Armijo backtracking from there.
    double step = cfg.initial_step;
    if (!prev_phi.empty()) {
      double ss = 0.0;
      double sy = 0.0;
      for (std::size_t i = 0; i < level; ++i) {
        const double di = phi[i] - prev_phi[i];
        const double yi = prev_grad[i] - current.gradient[i];
        ss += di * di;
        sy += di * yi;
      }
      if (sy > 0.0 && std::isfinite(ss / sy)) step = ss / sy;
    }
    const double g2 = gnorm * gnorm;
    std::vector<double> trial(level);
    ObjectiveValue candidate;
    bool accepted = false;
    for (int bt = 0; bt < 200; ++bt) {
      for (std::size_t i = 0; i < level; ++i) {
        trial[i] = phi[i] + step * current.gradient[i];
      }
      candidate = saa_objective(model, u, s, trial, cfg.workers);
      if (std::isfinite(candidate.value) &&
          candidate.value >= current.value + cfg.armijo * step * g2) {
        accepted = true;
        break;
      }
      step *= cfg.shrink;
    }
    if (!accepted) break;  // stalled at floating-point resolution
    prev_phi = phi;
    prev_grad = current.gradient;
    phi = trial;
    current = std::move(candidate);
  }
  if (!result.converged && l2_norm(current.gradient) <= cfg.gradient_tolerance) {
    result.converged = true;
  }

  result.iterations = iter;
  result.gradient_norm = l2_norm(current.gradient);
  result.phi_star.phi = phi;

  // Recompute the value through the payoff map, independent of the solver.
  std::vector<double> payoff(s.size());
  for (std::size_t r = 0; r < s.size(); ++r) {
    const auto eps = s.row(r);
    double v = 0.0;
    const auto b = model.b();
    for (std::size_t i = 0; i < level; ++i) v += phi[i] * (eps[i] - b[i]);
    payoff[r] = u.value(v);
  }
  const Estimate e = estimate(s, payoff, cfg.workers);
  result.value = e.value;
  result.value_standard_error = e.standard_error;
  return result;
}

ScenarioSet make_scenarios(const MarketModel& model, const ScenarioPolicy& policy,
                           std::size_t workers) {
  if (policy.mode == ScenarioPolicy::Mode::exact) {
    try {
      return enumerate_scenarios(model, policy.cap);
    } catch (const EnumerationCapError&) {
      if (!policy.fallback_to_monte_carlo) throw;
    }
  }
  return sample_scenarios(model, policy.n, policy.seed, workers);
}

OptimizationReport truncation_ladder(const MarketModel& model, const Utility& u,
                                     const SolverConfig& cfg,
                                     const ScenarioPolicy& policy) {
  cfg.validate();
  if (cfg.ladder.empty()) throw ModelError("ladder needs at least one level");
  OptimizationReport report;
  std::vector<double> previous;
  double previous_value = -std::numeric_limits<double>::infinity();
  bool have_previous = false;
  for (std::size_t level : cfg.ladder) {
    if (level == 0 || level > model.K()) {
      throw ModelError("ladder level " + std::to_string(level) +
                       " outside [1, K]");
    }
    const ScenarioSet s =
        make_scenarios(centered_view(model, level), policy, cfg.workers);
    LevelReport lr;
    lr.result = optimize_truncated(model, u, level, s, cfg);
    const auto& phi = lr.result.phi_star.phi;
    if (!have_previous || phi.empty() || previous.empty()) {
      lr.diff_norm = kNaN;
    } else {
      std::vector<double> diff(std::max(phi.size(), previous.size()), 0.0);
      for (std::size_t i = 0; i < phi.size(); ++i) diff[i] += phi[i];
      for (std::size_t i = 0; i < previous.size(); ++i) diff[i] -= previous[i];
      lr.diff_norm = l2_norm(diff);
    }
    if (lr.result.converged) {
      if (have_previous && lr.result.value < previous_value - 1e-8) {
        report.monotone = false;
      }
      previous_value = std::max(previous_value, lr.result.value);
    }
    previous = phi;
    have_previous = true;
    report.levels.push_back(std::move(lr));
  }
  return report;
}

}  // namespace apm
