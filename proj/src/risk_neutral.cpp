#include "apm/risk_neutral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "apm/numerics.hpp"
#include "apm/utility.hpp"

namespace apm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

double logistic_weight(double x) noexcept {
  if (x > 0.0) {
    const double e = std::exp(-x);
    return 0.5 + e / (1.0 + e);
  }
  return 0.5 + 1.0 / (1.0 + std::exp(x));
}

double tilt_moment(const ScalarLaw& eps, double b, double a) {
  return eps.expect(
      [a, b](double e) { return logistic_weight(a * (e - b)) * (e - b); });
}

TiltSolution solve_tilt(const ScalarLaw& eps, double b, double tolerance,
                        double bracket) {
  if (!(eps.prob_below(b) > 0.0) || !(eps.prob_above(b) > 0.0)) {
    throw TiltError(
        "eps - b is one-sided: no tilt can price it (arbitrage, or use the "
        "utility-measure fallback)");
  }
  TiltSolution sol;
  const double at_zero = tilt_moment(eps, b, 0.0);
  if (std::abs(at_zero) <= tolerance) {
    sol.a = 0.0;
    sol.residual = at_zero;
    sol.converged = true;
    return sol;
  }
  double lo = -bracket;
  double hi = bracket;
  const double g_lo = tilt_moment(eps, b, lo);
  const double g_hi = tilt_moment(eps, b, hi);
  if (!(g_lo > 0.0 && g_hi < 0.0)) {
    sol.a = std::abs(g_lo) < std::abs(g_hi) ? lo : hi;
    sol.residual = std::min(std::abs(g_lo), std::abs(g_hi));
    sol.converged = false;
    return sol;
  }
  double best_a = 0.0;
  double best_g = at_zero;
  for (std::size_t it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double g = tilt_moment(eps, b, mid);
    sol.iterations = it + 1;
    if (std::abs(g) < std::abs(best_g)) {
      best_a = mid;
      best_g = g;
    }
    if (std::abs(g) <= tolerance) break;
    if (mid <= lo || mid >= hi) break;
    if (g > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  sol.a = best_a;
  sol.residual = best_g;
  sol.converged = std::abs(best_g) <= tolerance;
  return sol;
}

std::string_view to_string(TiltMethod m) noexcept {
  return m == TiltMethod::logistic_tilt ? "logistic_tilt" : "meggy_fallback";
}

double CoordinateTilt::factor(double eps) const {
  const double x = eps - b;
  if (method == TiltMethod::logistic_tilt) return logistic_weight(a * x) / z;
  const Utility u = Utility::appendix_power(alpha);
  return u.derivative(phi_star * x) / normalizer;
}

double TiltedMeasure::density(std::span<const double> eps) const {
  double d = 1.0;
  for (std::size_t i = 0; i < coordinates_.size(); ++i) {
    d *= coordinates_[i].factor(eps[i]);
  }
  return d;
}

double TiltedMeasure::max_residual() const noexcept {
  double worst = 0.0;
  for (const auto& c : coordinates_) worst = std::max(worst, std::abs(c.residual));
  return worst;
}

namespace {

CoordinateTilt utility_measure_coordinate(const ScalarLaw& eps, double b,
                                          double alpha) {
  const ScalarLaw x = eps.shifted(-b);
  const Utility u = Utility::appendix_power(alpha);
  const SingleAssetResult opt = optimize_single_asset(x, u);
  CoordinateTilt c;
  c.method = TiltMethod::meggy_fallback;
  c.b = b;
  c.phi_star = opt.phi_star;
  c.alpha = alpha;
  const std::vector<double> kink{0.0};
  c.normalizer = x.expect(
      [&](double v) { return u.derivative(opt.phi_star * v); }, kink);
  return c;
}

}  // namespace

TiltedMeasure build_tilted_measure(const MarketModel& model,
                                   double fallback_alpha, double tolerance) {
  const auto na = check_no_arbitrage(model);
  if (!na.arbitrage_free()) {
    const std::size_t c = na.flagged.front();
    std::vector<double> witness(model.K(), 0.0);
    witness[c - 1] = na.coordinates[c - 1].prob_below == 0.0 ? 1.0 : -1.0;
    throw ArbitrageError("coordinate " + std::to_string(c) +
                             " violates no-arbitrage; no equivalent "
                             "risk-neutral measure exists",
                         std::move(witness));
  }
  if (!(fallback_alpha > 0.0 && fallback_alpha < 1.0)) {
    throw ModelError("fallback alpha must lie in (0, 1)");
  }
  std::vector<CoordinateTilt> coords;
  coords.reserve(model.K());
  const auto b = model.b();
  for (std::size_t i = 0; i < model.K(); ++i) {
    const ScalarLaw& law = model.noise(i).law();
    CoordinateTilt c;
    const TiltSolution sol = solve_tilt(law, b[i], tolerance);
    if (sol.converged) {
      c.method = TiltMethod::logistic_tilt;
      c.b = b[i];
      c.a = sol.a;
      c.z = law.expect(
          [&](double e) { return logistic_weight(sol.a * (e - b[i])); });
    } else {
      c = utility_measure_coordinate(law, b[i], fallback_alpha);
    }
    const std::vector<double> kink{b[i]};
    c.residual = law.expect([&](double e) { return c.factor(e) * (e - b[i]); },
                            kink);
    coords.push_back(c);
  }
  return TiltedMeasure(std::move(coords));
}

MeasureReport measure_moments(const TiltedMeasure& q, const ScenarioSet& s,
                              std::span<const double> w_list,
                              std::size_t workers) {
  if (s.dim() < q.size()) throw ModelError("scenario set narrower than measure");
  MeasureReport report;
  report.monte_carlo = !s.is_exact();
  std::vector<double> density(s.size());
  for_each_block(s.size(), workers, [&](std::size_t, std::size_t begin,
                                        std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) density[r] = q.density(s.row(r));
  });
  std::vector<double> values(s.size());
  for (double w : w_list) {
    MomentRow row;
    row.w = w;
    for (std::size_t r = 0; r < s.size(); ++r) values[r] = std::pow(density[r], w);
    row.density_moment = estimate(s, values, workers);
    for (std::size_t r = 0; r < s.size(); ++r) values[r] = std::pow(density[r], -w);
    row.reciprocal_moment = estimate(s, values, workers);
    report.moments.push_back(row);
  }
  report.max_pricing_residual = q.max_residual();
  for (const auto& c : q.coordinates()) {
    const bool logistic = c.method == TiltMethod::logistic_tilt;
    report.tilt_ratios.push_back(logistic && c.b != 0.0 ? std::abs(c.a) / std::abs(c.b)
                                                        : kNaN);
    report.tilt_energy += (logistic ? c.a * c.a : 0.0) + c.b * c.b;
  }
  if (report.tilt_energy > 0.0) {
    double c = 0.0;
    for (const auto& row : report.moments) {
      c = std::max(c, std::log(row.density_moment.value) / report.tilt_energy);
      c = std::max(c, std::log(row.reciprocal_moment.value) / report.tilt_energy);
    }
    report.fitted_c = c;
  }
  return report;
}

double product_moment(const TiltedMeasure& q, const MarketModel& model, double w) {
  double result = 1.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const auto& c = q.coordinates()[i];
    const std::vector<double> kink{c.b};
    result *= model.noise(i).law().expect(
        [&](double e) { return std::pow(c.factor(e), w); }, kink);
  }
  return result;
}

double SingleAssetMeasure::density_at(double x) const {
  return Utility::appendix_power(alpha).derivative(phi_star * x) / normalizer;
}

SingleAssetMeasure single_asset_measure(const ScalarLaw& x, double alpha,
                                        std::span<const double> w_list) {
  const Utility u = Utility::appendix_power(alpha);
  const SingleAssetResult opt = optimize_single_asset(x, u);
  SingleAssetMeasure m;
  m.phi_star = opt.phi_star;
  m.alpha = alpha;
  const std::vector<double> kink{0.0};
  m.normalizer = x.expect([&](double v) { return u.derivative(m.phi_star * v); },
                          kink);
  m.density_bound = alpha / m.normalizer;
  m.mean_under_w =
      x.expect([&](double v) { return m.density_at(v) * v; }, kink);
  if (x.is_finite_discrete()) {
    for (double v : x.points()) {
      m.atoms.push_back(v);
      m.density.push_back(m.density_at(v));
    }
  }
  for (double w : w_list) {
    MomentRow row;
    row.w = w;
    row.density_moment.value =
        x.expect([&](double v) { return std::pow(m.density_at(v), w); }, kink);
    row.reciprocal_moment.value =
        x.expect([&](double v) { return std::pow(m.density_at(v), -w); }, kink);
    m.moments.push_back(row);
  }
  return m;
}

PricingReport verify_pricing(const TiltedMeasure& q, const MarketModel& model,
                             std::span<const FactorStrategy> strategies,
                             const ScenarioSet& s, std::size_t workers) {
  if (s.dim() < model.K() || q.size() < model.K()) {
    throw ModelError("scenario set or measure narrower than the model");
  }
  PricingReport report;
  std::vector<double> density(s.size());
  for (std::size_t r = 0; r < s.size(); ++r) density[r] = q.density(s.row(r));
  std::vector<double> values(s.size());
  auto record = [&](std::vector<Estimate>& into) {
    const Estimate e = estimate(s, values, workers);
    report.max_abs_residual = std::max(report.max_abs_residual, std::abs(e.value));
    if (e.standard_error > 0.0) {
      report.max_standard_errors =
          std::max(report.max_standard_errors, std::abs(e.value) / e.standard_error);
    }
    into.push_back(e);
  };
  for (std::size_t i = 1; i <= model.K(); ++i) {
    for (std::size_t r = 0; r < s.size(); ++r) {
      values[r] = density[r] * asset_return(model, i, s.row(r)).centered;
    }
    record(report.asset_residuals);
  }
  for (const auto& strategy : strategies) {
    for (std::size_t r = 0; r < s.size(); ++r) {
      values[r] = density[r] * portfolio_value(model, strategy.phi, s.row(r));
    }
    record(report.strategy_residuals);
  }
  return report;
}

}  // namespace apm
