#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace apm {

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A one-dimensional probability law. Not necessarily standardized; this is
/// the type behind single-asset problems such as X = eps - b.
///
/// Four shapes are supported:
///   - discrete: finitely many atoms;
///   - uniform: continuous uniform on [lo, hi];
///   - normal: Gaussian with mean `shift` and standard deviation `scale`;
///   - dyadic: atoms at shift +/- scale * 2^k, k = 0, 1, ..., each side
///     carrying (1 - rho) rho^k / 2. Unbounded in both directions, finite
///     variance for rho < 1/4, no exponential moment of any order.
class ScalarLaw {
 public:
  enum class Shape { discrete, uniform, normal, dyadic };

  static ScalarLaw discrete(std::vector<double> points,
                            std::vector<double> probs);
  static ScalarLaw uniform(double lo, double hi);
  static ScalarLaw dyadic(double scale, double rho, double shift = 0.0);
  static ScalarLaw normal(double mean, double sd);

  [[nodiscard]] Shape shape() const noexcept { return shape_; }
  [[nodiscard]] bool is_finite_discrete() const noexcept {
    return shape_ == Shape::discrete;
  }
  /// Atoms of a discrete law, sorted ascending. Empty otherwise.
  [[nodiscard]] std::span<const double> points() const noexcept {
    return points_;
  }
  [[nodiscard]] std::span<const double> probs() const noexcept {
    return probs_;
  }

  /// Law of X + delta.
  [[nodiscard]] ScalarLaw shifted(double delta) const;

  /// E[f(X)]. `breakpoints` lists points where f is not smooth; they split
  /// the quadrature for the continuous shape and are ignored otherwise.
  [[nodiscard]] double expect(const std::function<double(double)>& f,
                              std::span<const double> breakpoints = {}) const;

  /// P(X < x), strict.
  [[nodiscard]] double prob_below(double x) const;
  /// P(X > x), strict.
  [[nodiscard]] double prob_above(double x) const;

  [[nodiscard]] double mean() const;
  [[nodiscard]] double variance() const;

  /// E[exp(gamma |X|)], +inf when the moment does not exist.
  [[nodiscard]] double exp_abs_moment(double gamma) const;

  /// E[X^2 1{|X| >= level}].
  [[nodiscard]] double truncated_second_moment(double level) const;

  /// Inverse-CDF transform of u in (0, 1).
  [[nodiscard]] double quantile(double u) const;

  /// Support bounds (+/-inf for the normal and dyadic shapes).
  [[nodiscard]] double support_min() const;
  [[nodiscard]] double support_max() const;

 private:
  ScalarLaw() = default;

  [[nodiscard]] std::size_t dyadic_terms() const;
  [[nodiscard]] double mirrored_above() const;

  Shape shape_ = Shape::discrete;
  std::vector<double> points_;
  std::vector<double> probs_;
  std::vector<double> cumulative_;
  double lo_ = 0.0;
  double hi_ = 0.0;
  double scale_ = 0.0;
  double rho_ = 0.0;
  double shift_ = 0.0;
};

/// Noise families. Every family is standardized to mean 0 and variance 1.
enum class NoiseFamily {
  finite_discrete,
  rademacher,
  standardized_uniform,
  standardized_two_point,
  dyadic_tails,
  standard_normal,
};

std::string_view to_string(NoiseFamily family) noexcept;
NoiseFamily noise_family_from_string(std::string_view name);

class DistributionSpec {
 public:
  /// Arbitrary finite law; rejected unless probabilities sum to 1 (1e-12)
  /// and the law has mean 0, variance 1 (1e-10).
  static DistributionSpec finite_discrete(std::vector<double> points,
                                          std::vector<double> probs);
  static DistributionSpec rademacher();
  /// Uniform on [-sqrt(3), sqrt(3)].
  static DistributionSpec standardized_uniform();
  /// Bernoulli(p) standardized: sqrt((1-p)/p) w.p. p, -sqrt(p/(1-p)) else.
  static DistributionSpec standardized_two_point(double p);
  /// Symmetric dyadic atoms, parameter rho in (0, 1/4).
  static DistributionSpec dyadic_tails(double rho);
  static DistributionSpec standard_normal();

  [[nodiscard]] NoiseFamily family() const noexcept { return family_; }
  [[nodiscard]] const ScalarLaw& law() const noexcept { return law_; }
  [[nodiscard]] bool is_finite_discrete() const noexcept {
    return law_.is_finite_discrete();
  }
  /// Family parameter (p for two-point, rho for dyadic), 0 otherwise.
  [[nodiscard]] double parameter() const noexcept { return parameter_; }

 private:
  DistributionSpec(NoiseFamily family, ScalarLaw law, double parameter)
      : family_(family), law_(std::move(law)), parameter_(parameter) {}

  NoiseFamily family_;
  ScalarLaw law_;
  double parameter_ = 0.0;
};

}  // namespace apm
