#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "apm/distribution.hpp"
#include "apm/market.hpp"

namespace apm {

/// Raised when exact enumeration would exceed the joint-support cap.
class EnumerationCapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultEnumerationCap = 1'000'000;

struct Provenance {
  enum class Kind { monte_carlo, exact_enumeration };
  Kind kind = Kind::exact_enumeration;
  std::uint64_t seed = 0;
  std::size_t n = 0;
};

/// Weighted noise realizations. Row-major n x dim storage; weights sum to 1.
class ScenarioSet {
 public:
  ScenarioSet(std::size_t dim, std::vector<double> draws,
              std::vector<double> weights, Provenance provenance);

  [[nodiscard]] std::size_t size() const noexcept { return weights_.size(); }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
    return {draws_.data() + i * dim_, dim_};
  }
  [[nodiscard]] std::span<const double> weights() const noexcept {
    return weights_;
  }
  [[nodiscard]] std::span<const double> draws() const noexcept { return draws_; }
  [[nodiscard]] const Provenance& provenance() const noexcept {
    return provenance_;
  }
  [[nodiscard]] bool is_exact() const noexcept {
    return provenance_.kind == Provenance::Kind::exact_enumeration;
  }

  /// CSV with header "eps_1,...,eps_dim,weight", one line per scenario.
  void write_csv(std::ostream& out) const;

 private:
  std::size_t dim_;
  std::vector<double> draws_;
  std::vector<double> weights_;
  Provenance provenance_;
};

/// n i.i.d. rows of the model noise. Row j, coordinate i is a function of
/// (seed, j, i) only, so the result does not depend on `workers`.
ScenarioSet sample_scenarios(const MarketModel& model, std::size_t n,
                             std::uint64_t seed, std::size_t workers = 1);

/// Exact product-measure support. Every coordinate must be finite discrete.
/// Throws EnumerationCapError when the joint support exceeds `cap`.
ScenarioSet enumerate_scenarios(const MarketModel& model,
                                std::size_t cap = kDefaultEnumerationCap);

/// Sum of weights * values (compensated, fixed reduction order).
double expectation(const ScenarioSet& s, std::span<const double> values,
                   std::size_t workers = 1);

struct Estimate {
  double value = 0.0;
  /// Sampling standard error; 0 for exact enumeration.
  double standard_error = 0.0;
};

/// Expectation plus a Monte Carlo standard error when `s` is sampled.
Estimate estimate(const ScenarioSet& s, std::span<const double> values,
                  std::size_t workers = 1);

/// E[exp(gamma |eps|)]; +inf when the family has no such moment.
double estimate_exp_moment(const DistributionSpec& dist, double gamma);

enum class TailSide { below, above };

/// P(eps < x) or P(eps > x), strict on both sides.
double tail_probability(const DistributionSpec& dist, double x, TailSide side);

}  // namespace apm
