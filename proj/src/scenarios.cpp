#include "apm/scenarios.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "apm/numerics.hpp"
#include "apm/philox.hpp"

namespace apm {

ScenarioSet::ScenarioSet(std::size_t dim, std::vector<double> draws,
                         std::vector<double> weights, Provenance provenance)
    : dim_(dim),
      draws_(std::move(draws)),
      weights_(std::move(weights)),
      provenance_(provenance) {
  if (weights_.empty()) throw ModelError("scenario set is empty");
  if (draws_.size() != weights_.size() * dim_) {
    throw ModelError("scenario draws do not match weights x dim");
  }
  CompensatedSum total;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw ModelError("scenario weights must be nonnegative");
    total.add(w);
  }
  if (std::abs(total.value() - 1.0) > 1e-12) {
    throw ModelError("scenario weights must sum to 1");
  }
}

void ScenarioSet::write_csv(std::ostream& out) const {
  const auto old_precision = out.precision(17);
  for (std::size_t c = 0; c < dim_; ++c) out << "eps_" << (c + 1) << ',';
  out << "weight\n";
  for (std::size_t r = 0; r < size(); ++r) {
    for (double x : row(r)) out << x << ',';
    out << weights_[r] << '\n';
  }
  out.precision(old_precision);
}

ScenarioSet sample_scenarios(const MarketModel& model, std::size_t n,
                             std::uint64_t seed, std::size_t workers) {
  if (n == 0) throw ModelError("sample_scenarios needs n >= 1");
  const std::size_t dim = model.K();
  std::vector<double> draws(n * dim);
  for_each_block(n, workers, [&](std::size_t, std::size_t begin,
                                 std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      for (std::size_t c = 0; c < dim; ++c) {
        draws[r * dim + c] =
            model.noise(c).law().quantile(Philox4x32::uniform(seed, r, c));
      }
    }
  });
  std::vector<double> weights(n, 1.0 / static_cast<double>(n));
  if (n > 1) {
    // Push the rounding residual into the last weight so the sum is 1.
    CompensatedSum head;
    for (std::size_t i = 0; i + 1 < n; ++i) head.add(weights[i]);
    weights.back() = 1.0 - head.value();
  }
  return {dim, std::move(draws), std::move(weights),
          {Provenance::Kind::monte_carlo, seed, n}};
}

ScenarioSet enumerate_scenarios(const MarketModel& model, std::size_t cap) {
  const std::size_t dim = model.K();
  std::size_t n = 1;
  for (std::size_t c = 0; c < dim; ++c) {
    const auto& law = model.noise(c).law();
    if (!law.is_finite_discrete()) {
      throw EnumerationCapError("coordinate " + std::to_string(c + 1) +
                                " is not finite discrete; use Monte Carlo");
    }
    const std::size_t atoms = law.points().size();
    if (n > cap / atoms) {
      throw EnumerationCapError("joint support exceeds the enumeration cap of " +
                                std::to_string(cap) + "; use Monte Carlo");
    }
    n *= atoms;
  }
  std::vector<double> draws(n * dim);
  std::vector<double> weights(n);
  std::vector<std::size_t> digit(dim, 0);
  for (std::size_t r = 0; r < n; ++r) {
    double w = 1.0;
    for (std::size_t c = 0; c < dim; ++c) {
      const auto& law = model.noise(c).law();
      draws[r * dim + c] = law.points()[digit[c]];
      w *= law.probs()[digit[c]];
    }
    weights[r] = w;
    // Last coordinate varies fastest.
    for (std::size_t c = dim; c-- > 0;) {
      if (++digit[c] < model.noise(c).law().points().size()) break;
      digit[c] = 0;
    }
  }
  return {dim, std::move(draws), std::move(weights),
          {Provenance::Kind::exact_enumeration, 0, n}};
}

double expectation(const ScenarioSet& s, std::span<const double> values,
                   std::size_t workers) {
  if (values.size() != s.size()) {
    throw std::invalid_argument("expectation: values/scenario length mismatch");
  }
  const auto w = s.weights();
  return deterministic_sum(s.size(), workers,
                           [&](std::size_t i) { return w[i] * values[i]; });
}

Estimate estimate(const ScenarioSet& s, std::span<const double> values,
                  std::size_t workers) {
  Estimate e;
  e.value = expectation(s, values, workers);
  if (!s.is_exact() && s.size() > 1) {
    const auto w = s.weights();
    const double mean = e.value;
    const double second = deterministic_sum(s.size(), workers, [&](std::size_t i) {
      const double d = values[i] - mean;
      return w[i] * d * d;
    });
    const double n = static_cast<double>(s.size());
    e.standard_error = std::sqrt(second * n / (n - 1.0) / n);
  }
  return e;
}

double estimate_exp_moment(const DistributionSpec& dist, double gamma) {
  return dist.law().exp_abs_moment(gamma);
}

double tail_probability(const DistributionSpec& dist, double x, TailSide side) {
  return side == TailSide::below ? dist.law().prob_below(x)
                                 : dist.law().prob_above(x);
}

}  // namespace apm
