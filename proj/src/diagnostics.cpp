#include "apm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "apm/numerics.hpp"
#include "apm/philox.hpp"

namespace apm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kBoundSlack = 1e-9;

constexpr double kDefaultGammas[] = {0.25, 0.5, 1.0, 2.0};
constexpr double kDefaultX[] = {0.0, 0.5, 1.0, 2.0, 4.0, 8.0};
constexpr double kDefaultN[] = {1.0, 2.0, 4.0, 8.0, 16.0};
constexpr double kTailLevels[] = {10.0, 100.0, 1000.0};

double noise_sum(std::span<const double> phi, std::span<const double> eps) {
  CompensatedSum acc;
  for (std::size_t i = 0; i < phi.size(); ++i) acc.add(phi[i] * eps[i]);
  return acc.value();
}

}  // namespace

std::vector<FactorStrategy> random_strategies(std::size_t dim, std::size_t count,
                                              double max_norm, std::uint64_t seed) {
  if (dim == 0) throw ModelError("strategies need dim >= 1");
  if (!(max_norm >= 0.0)) throw ModelError("max_norm must be nonnegative");
  std::vector<FactorStrategy> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    FactorStrategy s;
    s.phi.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      s.phi[i] = 2.0 * Philox4x32::uniform(seed, k, i) - 1.0;
    }
    const double norm = l2_norm(s.phi);
    const double radius = max_norm * Philox4x32::uniform(seed, k, dim);
    for (double& x : s.phi) x = norm > 0.0 ? x * radius / norm : 0.0;
    out.push_back(std::move(s));
  }
  return out;
}

SubGaussianReport check_subgaussian(const MarketModel& model,
                                    std::span<const double> gammas) {
  if (gammas.empty()) gammas = kDefaultGammas;
  SubGaussianReport report;
  report.gamma = kNaN;
  for (double g : gammas) {
    double sup = 0.0;
    for (std::size_t i = 0; i < model.K(); ++i) {
      sup = std::max(sup, estimate_exp_moment(model.noise(i), g));
    }
    report.scan.push_back({g, sup});
    if (std::isfinite(sup) && (std::isnan(report.gamma) || g > report.gamma)) {
      report.gamma = g;
    }
  }
  report.verdict = std::isnan(report.gamma) ? Verdict::fails : Verdict::holds;
  return report;
}

ExpUIReport exp_ui_bound(const MarketModel& model, std::span<const double> deltas,
                         std::size_t trials, std::uint64_t seed,
                         const ScenarioSet& s, std::size_t workers) {
  if (s.dim() < model.K()) throw ModelError("scenario set narrower than model");
  ExpUIReport report;
  report.monte_carlo = !s.is_exact();
  std::vector<double> values(s.size());
  std::vector<double> tail_max(std::size(kTailLevels), 0.0);
  for (std::size_t d = 0; d < deltas.size(); ++d) {
    // Each delta draws from its own stream of the seed.
    const auto strategies =
        random_strategies(model.K(), trials, deltas[d], seed + d * 0x9E3779B97F4A7C15ULL);
    ExpMomentRow row;
    row.delta = deltas[d];
    for (const auto& st : strategies) {
      for (std::size_t r = 0; r < s.size(); ++r) {
        values[r] = std::exp(std::abs(noise_sum(st.phi, s.row(r))));
      }
      ExpMomentTrial t{deltas[d], st.norm(), expectation(s, values, workers)};
      row.sup_value = std::max(row.sup_value, t.value);
      if (t.norm > 0.0) {
        row.fitted_C = std::max(row.fitted_C, std::log(t.value / 2.0) / (t.norm * t.norm));
      }
      for (std::size_t j = 0; j < std::size(kTailLevels); ++j) {
        for (std::size_t r = 0; r < s.size(); ++r) {
          const double z = noise_sum(st.phi, s.row(r));
          values[r] = z * z > kTailLevels[j] ? z * z : 0.0;
        }
        tail_max[j] = std::max(tail_max[j], expectation(s, values, workers));
      }
      report.trials.push_back(t);
    }
    report.fitted_C = std::max(report.fitted_C, row.fitted_C);
    report.rows.push_back(row);
  }
  for (const auto& t : report.trials) {
    const double bound =
        2.0 * std::exp(report.fitted_C * t.norm * t.norm) * (1.0 + kBoundSlack);
    if (!(t.value <= bound)) report.within_bound = false;
  }
  for (std::size_t j = 0; j < std::size(kTailLevels); ++j) {
    report.tails.push_back({kTailLevels[j], tail_max[j]});
  }
  return report;
}

HolderReport holder_chain_check(const MarketModel& model, const TiltedMeasure& q,
                                const Utility& u,
                                std::span<const FactorStrategy> strategies,
                                const ScenarioSet& s, std::size_t workers) {
  const auto& cert = u.certificate();
  if (!cert) {
    throw ModelError("Hoelder chain needs a utility with a growth certificate");
  }
  cert->validate();
  if (s.dim() < model.K() || q.size() < model.K()) {
    throw ModelError("scenario set or measure narrower than the model");
  }
  HolderReport report;
  report.monte_carlo = !s.is_exact();
  HolderConstants& c = report.constants;
  c.alpha = cert->alpha;
  c.beta = cert->beta;
  c.C1 = cert->C1;
  c.C2 = cert->C2;

  std::vector<double> density(s.size());
  for (std::size_t r = 0; r < s.size(); ++r) density[r] = q.density(s.row(r));
  std::vector<double> values(s.size());
  const double a = c.alpha;
  const double b = c.beta;
  for (std::size_t r = 0; r < s.size(); ++r) values[r] = std::pow(density[r], -a / (1.0 - a));
  c.C_prime = std::pow(expectation(s, values, workers), 1.0 - a);
  for (std::size_t r = 0; r < s.size(); ++r) values[r] = std::pow(density[r], b / (b - 1.0));
  c.C_double_prime = std::pow(expectation(s, values, workers), a * (b - 1.0) / b);

  report.pricing_residual =
      verify_pricing(q, model, strategies, s, workers).max_abs_residual;

  report.min_margin = std::numeric_limits<double>::infinity();
  std::vector<double> lower(s.size());
  for (const auto& st : strategies) {
    for (std::size_t r = 0; r < s.size(); ++r) {
      const double y = portfolio_value(model, st.phi, s.row(r));
      values[r] = u.value(std::max(y, 0.0));
      lower[r] = u.value(-std::max(-y, 0.0));
    }
    HolderRow row;
    row.norm = st.norm();
    row.lhs = expectation(s, values, workers);
    row.lower_part = expectation(s, lower, workers);
    const double base = std::max(-row.lower_part / c.C2 + 1.0, 0.0);
    row.rhs = c.C1 * (c.C_prime * c.C_double_prime * std::pow(base, a / b) + 1.0);
    row.margin = row.rhs - row.lhs;
    report.min_margin = std::min(report.min_margin, row.margin);
    report.rows.push_back(row);
  }
  if (report.rows.empty()) report.min_margin = kNaN;
  return report;
}

double value_cap(const HolderConstants& c, double u_at_zero) {
  // f(t) = A (t + 1)^g - C2 t is concave in t; stationary at
  // (t + 1)^{1 - g} = A g / C2.
  const double A = c.C1 * c.C_prime * c.C_double_prime;
  const double g = c.alpha / c.beta;
  double t = 0.0;
  if (g > 0.0) {
    t = std::max(std::pow(A * g / c.C2, 1.0 / (1.0 - g)) - 1.0, 0.0);
  }
  return A * std::pow(t + 1.0, g) + c.C1 - c.C2 * t + std::abs(u_at_zero);
}

RelevantReport check_assumption_relevant(const MarketModel& model,
                                         std::span<const double> x_grid,
                                         std::span<const double> n_grid) {
  if (x_grid.empty()) x_grid = kDefaultX;
  if (n_grid.empty()) n_grid = kDefaultN;
  RelevantReport report;
  report.first_failing_x = kNaN;
  report.tails = Verdict::holds;
  for (double x : x_grid) {
    RelevantReport::TailRow row{x, 1.0, 1.0};
    for (std::size_t i = 0; i < model.K(); ++i) {
      row.inf_above = std::min(row.inf_above,
                               tail_probability(model.noise(i), x, TailSide::above));
      row.inf_below = std::min(row.inf_below,
                               tail_probability(model.noise(i), -x, TailSide::below));
    }
    if (!(row.inf_above > 0.0 && row.inf_below > 0.0) &&
        report.tails == Verdict::holds) {
      report.tails = Verdict::fails;
      report.first_failing_x = x;
    }
    report.tail_rows.push_back(row);
  }
  // Finitely many finite-variance coordinates: the supremum tends to 0 as N
  // grows, so the condition can only fail through an infinite variance.
  report.uniform_integrability = Verdict::holds;
  for (double n : n_grid) {
    RelevantReport::MomentRow row{n, 0.0};
    for (std::size_t i = 0; i < model.K(); ++i) {
      row.sup_truncated =
          std::max(row.sup_truncated, model.noise(i).law().truncated_second_moment(n));
    }
    if (!std::isfinite(row.sup_truncated)) {
      report.uniform_integrability = Verdict::fails;
    }
    report.moment_rows.push_back(row);
  }
  return report;
}

AssumptionVerdicts CheckReport::verdicts() const {
  AssumptionVerdicts v;
  v.assumption_b = assumption_b.verdict;
  v.novum_subgauss = subgaussian.verdict;
  v.novum_na = no_arbitrage.arbitrage_free() ? Verdict::holds : Verdict::fails;
  v.relevant_tails = relevant.tails;
  v.relevant_ui = relevant.uniform_integrability;
  return v;
}

CheckReport run_checks(const MarketModel& model) {
  CheckReport report;
  report.assumption_b = check_assumption_b(model);
  report.no_arbitrage = check_no_arbitrage(model);
  report.subgaussian = check_subgaussian(model);
  report.relevant = check_assumption_relevant(model);
  return report;
}

}  // namespace apm
