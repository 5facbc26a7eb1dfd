#include "apm/market.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "apm/numerics.hpp"

namespace apm {

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::holds:
      return "holds";
    case Verdict::fails:
      return "fails";
    case Verdict::undecided:
      return "undecided";
  }
  return "undecided";
}

double FactorStrategy::norm() const noexcept { return l2_norm(phi); }

double MarketModel::loading(std::size_t asset, std::size_t factor) const {
  return spec_.beta.at(asset - spec_.m - 1).at(factor - 1);
}

MarketModel MarketModel::truncated(std::size_t level) const {
  if (level < spec_.m || level > spec_.K) {
    throw ModelError("truncation level must lie in [m, K]");
  }
  ModelSpec s = spec_;
  s.K = level;
  s.mu.resize(level);
  s.beta.resize(level - s.m);
  s.beta_bar.resize(level);
  s.noise.erase(s.noise.begin() + static_cast<std::ptrdiff_t>(level),
                s.noise.end());
  std::vector<double> b(b_.begin(), b_.begin() + static_cast<std::ptrdiff_t>(level));
  const double M = l2_norm(b);
  return {std::move(s), std::move(b), M};
}

MarketModel build_market(ModelSpec spec) {
  if (spec.m < 1) throw ModelError("model needs at least one factor (m >= 1)");
  if (spec.K < spec.m) throw ModelError("truncation level K must be >= m");
  const std::size_t K = spec.K;
  const std::size_t m = spec.m;
  if (spec.mu.size() != K) throw ModelError("mu must have K entries");
  if (spec.beta_bar.size() != K) throw ModelError("beta_bar must have K entries");
  if (spec.noise.size() != K) throw ModelError("noise must have K entries");
  if (spec.beta.size() != K - m) {
    throw ModelError("beta must have K - m rows");
  }
  for (const auto& row : spec.beta) {
    if (row.size() != m) throw ModelError("each beta row needs m loadings");
  }
  for (std::size_t i = 0; i < K; ++i) {
    if (spec.beta_bar[i] == 0.0) {
      throw ModelError("beta_bar_" + std::to_string(i + 1) +
                       " is zero: model is ill-posed");
    }
  }

  std::vector<double> b(K);
  for (std::size_t i = 0; i < m; ++i) b[i] = -spec.mu[i] / spec.beta_bar[i];
  for (std::size_t i = m; i < K; ++i) {
    CompensatedSum acc;
    acc.add(-spec.mu[i] / spec.beta_bar[i]);
    for (std::size_t j = 0; j < m; ++j) {
      acc.add(spec.mu[j] * spec.beta[i - m][j] /
              (spec.beta_bar[j] * spec.beta_bar[i]));
    }
    b[i] = acc.value();
  }
  const double M = l2_norm(b);
  return {std::move(spec), std::move(b), M};
}

MarketModel market_from_drifts(std::vector<double> b,
                               std::vector<DistributionSpec> noise,
                               BRule rule) {
  ModelSpec spec;
  spec.K = b.size();
  spec.m = b.size();
  spec.mu.resize(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) spec.mu[i] = -b[i];
  spec.beta_bar.assign(b.size(), 1.0);
  spec.noise = std::move(noise);
  spec.b_rule = std::move(rule);
  return build_market(std::move(spec));
}

MarketModel market_from_drifts(std::vector<double> b,
                               const DistributionSpec& noise, BRule rule) {
  std::vector<DistributionSpec> all(b.size(), noise);
  return market_from_drifts(std::move(b), std::move(all), std::move(rule));
}

MarketModel centered_view(const MarketModel& model, std::size_t level) {
  if (level == 0 || level > model.K()) {
    throw ModelError("centered view level must lie in [1, K]");
  }
  const auto n = static_cast<std::ptrdiff_t>(level);
  return market_from_drifts(
      std::vector<double>(model.b().begin(), model.b().begin() + n),
      std::vector<DistributionSpec>(model.spec().noise.begin(),
                                    model.spec().noise.begin() + n));
}

ReturnForms asset_return(const MarketModel& model, std::size_t asset,
                         std::span<const double> eps) {
  if (asset > model.K()) throw std::out_of_range("asset index out of range");
  if (asset == 0) return {0.0, 0.0};
  const auto& s = model.spec();
  const std::size_t m = model.m();
  if (eps.size() < std::max(asset, m)) {
    throw std::out_of_range("noise vector too short for asset");
  }
  const auto b = model.b();
  const std::size_t i = asset - 1;
  CompensatedSum raw;
  CompensatedSum centered;
  raw.add(s.mu[i]);
  if (asset > m) {
    for (std::size_t j = 0; j < m; ++j) {
      const double loading = s.beta[i - m][j];
      raw.add(loading * eps[j]);
      centered.add(loading * (eps[j] - b[j]));
    }
  }
  raw.add(s.beta_bar[i] * eps[i]);
  centered.add(s.beta_bar[i] * (eps[i] - b[i]));
  return {raw.value(), centered.value()};
}

FactorStrategy convert_portfolio(const MarketModel& model,
                                 const AssetPortfolio& portfolio) {
  const auto& psi = portfolio.psi;
  if (psi.size() > model.K() + 1) {
    throw ModelError("portfolio has more assets than the model");
  }
  CompensatedSum budget;
  double scale = 0.0;
  for (double x : psi) {
    budget.add(x);
    scale += std::abs(x);
  }
  if (std::abs(budget.value()) > 1e-12 * (1.0 + scale)) {
    throw ModelError("portfolio violates the budget constraint sum(psi) = 0");
  }
  const auto& s = model.spec();
  const std::size_t m = model.m();
  FactorStrategy out;
  out.phi.assign(model.K(), 0.0);
  auto amount = [&](std::size_t asset) {
    return asset < psi.size() ? psi[asset] : 0.0;
  };
  for (std::size_t j = 1; j <= m; ++j) {
    CompensatedSum acc;
    acc.add(amount(j) * s.beta_bar[j - 1]);
    for (std::size_t i = m + 1; i <= model.K(); ++i) {
      acc.add(amount(i) * s.beta[i - m - 1][j - 1]);
    }
    out.phi[j - 1] = acc.value();
  }
  for (std::size_t i = m + 1; i <= model.K(); ++i) {
    out.phi[i - 1] = amount(i) * s.beta_bar[i - 1];
  }
  return out;
}

double asset_portfolio_value(const MarketModel& model,
                             const AssetPortfolio& portfolio,
                             std::span<const double> eps) {
  CompensatedSum acc;
  for (std::size_t i = 1; i < portfolio.psi.size(); ++i) {
    acc.add(portfolio.psi[i] * asset_return(model, i, eps).raw);
  }
  return acc.value();
}

double portfolio_value(const MarketModel& model, std::span<const double> phi,
                       std::span<const double> eps) {
  if (phi.size() > model.K() || eps.size() < phi.size()) {
    throw std::out_of_range("strategy support exceeds the model or noise");
  }
  const auto b = model.b();
  CompensatedSum acc;
  for (std::size_t i = 0; i < phi.size(); ++i) acc.add(phi[i] * (eps[i] - b[i]));
  return acc.value();
}

AssumptionBReport check_assumption_b(const MarketModel& model) {
  AssumptionBReport report;
  CompensatedSum running;
  for (double bi : model.b()) {
    running.add(bi * bi);
    report.partial_sums.push_back(running.value());
  }
  const auto& rule = model.spec().b_rule;
  const double K = static_cast<double>(model.K());
  switch (rule.kind) {
    case BRule::Kind::zero:
      report.verdict = Verdict::holds;
      report.reason = "b_i = 0 beyond K";
      report.tail_bound = 0.0;
      break;
    case BRule::Kind::explicit_list: {
      CompensatedSum tail;
      for (double x : rule.values) tail.add(x * x);
      report.verdict = Verdict::holds;
      report.reason = "finitely many explicit b_i beyond K";
      report.tail_bound = tail.value();
      break;
    }
    case BRule::Kind::power_decay:
      if (rule.c == 0.0) {
        report.verdict = Verdict::holds;
        report.reason = "power rule with c = 0";
        report.tail_bound = 0.0;
      } else if (rule.p > 0.5) {
        // sum_{i>K} i^(-2p) <= int_K^inf x^(-2p) dx
        const double q = 2.0 * rule.p;
        report.verdict = Verdict::holds;
        report.reason = "p-series with 2p > 1 converges";
        report.tail_bound = rule.c * rule.c * std::pow(K, 1.0 - q) / (q - 1.0);
      } else {
        report.verdict = Verdict::fails;
        report.reason = "p-series with 2p <= 1 diverges";
        report.tail_bound = std::numeric_limits<double>::infinity();
      }
      break;
    case BRule::Kind::none:
      report.verdict = Verdict::undecided;
      report.reason = "no analytic rule for b_i beyond K";
      report.tail_bound = std::numeric_limits<double>::quiet_NaN();
      break;
  }
  return report;
}

NoArbitrageReport check_no_arbitrage(const MarketModel& model) {
  NoArbitrageReport report;
  const auto b = model.b();
  for (std::size_t i = 0; i < model.K(); ++i) {
    const auto& law = model.noise(i).law();
    CoordinateNA c{i + 1, b[i], law.prob_below(b[i]), law.prob_above(b[i])};
    if (!c.ok()) report.flagged.push_back(i + 1);
    report.coordinates.push_back(c);
  }
  return report;
}

}  // namespace apm
