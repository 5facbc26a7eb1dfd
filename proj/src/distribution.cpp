#include "apm/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "apm/numerics.hpp"

namespace apm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kProbTolerance = 1e-12;
constexpr double kMomentTolerance = 1e-10;
// Beyond this exponent 2^k overflows a double.
constexpr int kMaxDyadicExponent = 1000;
// Gaussian mass beyond this many standard deviations is below 1e-300.
constexpr double kNormalReach = 38.0;

double integrate_pieces(const std::function<double(double)>& f,
                        std::vector<double> cuts) {
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  CompensatedSum acc;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    acc.add(boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, cuts[i], cuts[i + 1], 12, 1e-13));
  }
  return acc.value();
}

}  // namespace

ScalarLaw ScalarLaw::discrete(std::vector<double> points,
                              std::vector<double> probs) {
  if (points.empty() || points.size() != probs.size()) {
    throw ModelError("discrete law needs matching, non-empty points/probs");
  }
  CompensatedSum total;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!std::isfinite(points[i]) || !std::isfinite(probs[i])) {
      throw ModelError("discrete law has non-finite entries");
    }
    if (probs[i] < 0.0) throw ModelError("negative probability");
    total.add(probs[i]);
  }
  if (std::abs(total.value() - 1.0) > kProbTolerance) {
    throw ModelError("probabilities must sum to 1");
  }
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return points[a] < points[b];
  });
  ScalarLaw law;
  law.shape_ = Shape::discrete;
  law.points_.reserve(points.size());
  law.probs_.reserve(points.size());
  for (auto i : order) {
    law.points_.push_back(points[i]);
    law.probs_.push_back(probs[i]);
  }
  law.cumulative_.resize(law.probs_.size());
  CompensatedSum running;
  for (std::size_t i = 0; i < law.probs_.size(); ++i) {
    running.add(law.probs_[i]);
    law.cumulative_[i] = running.value();
  }
  law.cumulative_.back() = 1.0;
  return law;
}

ScalarLaw ScalarLaw::uniform(double lo, double hi) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw ModelError("uniform law needs finite lo < hi");
  }
  ScalarLaw law;
  law.shape_ = Shape::uniform;
  law.lo_ = lo;
  law.hi_ = hi;
  return law;
}

ScalarLaw ScalarLaw::dyadic(double scale, double rho, double shift) {
  if (!(scale > 0.0) || !(rho > 0.0 && rho < 1.0)) {
    throw ModelError("dyadic law needs scale > 0 and rho in (0, 1)");
  }
  ScalarLaw law;
  law.shape_ = Shape::dyadic;
  law.scale_ = scale;
  law.rho_ = rho;
  law.shift_ = shift;
  return law;
}

ScalarLaw ScalarLaw::normal(double mean, double sd) {
  if (!(sd > 0.0) || !std::isfinite(sd) || !std::isfinite(mean)) {
    throw ModelError("normal law needs finite mean and sd > 0");
  }
  ScalarLaw law;
  law.shape_ = Shape::normal;
  law.shift_ = mean;
  law.scale_ = sd;
  return law;
}

ScalarLaw ScalarLaw::shifted(double delta) const {
  ScalarLaw law = *this;
  switch (shape_) {
    case Shape::discrete:
      for (double& x : law.points_) x += delta;
      break;
    case Shape::uniform:
      law.lo_ += delta;
      law.hi_ += delta;
      break;
    case Shape::normal:
    case Shape::dyadic:
      law.shift_ += delta;
      break;
  }
  return law;
}

std::size_t ScalarLaw::dyadic_terms() const {
  // Remaining mass rho^k below 1e-300, so that polynomially growing
  // integrands (x^2 grows like 4^k) lose nothing at double precision.
  const double k = std::ceil(std::log(1e-300) / std::log(rho_));
  return static_cast<std::size_t>(
      std::clamp(k, 1.0, static_cast<double>(kMaxDyadicExponent)));
}

double ScalarLaw::expect(const std::function<double(double)>& f,
                         std::span<const double> breakpoints) const {
  switch (shape_) {
    case Shape::discrete: {
      CompensatedSum acc;
      for (std::size_t i = 0; i < points_.size(); ++i) {
        if (probs_[i] != 0.0) acc.add(probs_[i] * f(points_[i]));
      }
      return acc.value();
    }
    case Shape::uniform: {
      std::vector<double> cuts{lo_, hi_};
      for (double x : breakpoints) {
        if (x > lo_ && x < hi_) cuts.push_back(x);
      }
      return integrate_pieces(f, std::move(cuts)) / (hi_ - lo_);
    }
    case Shape::normal: {
      const double lo = shift_ - kNormalReach * scale_;
      const double hi = shift_ + kNormalReach * scale_;
      std::vector<double> cuts{lo, hi};
      for (double k : {-8.0, -4.0, -2.0, 0.0, 2.0, 4.0, 8.0}) {
        cuts.push_back(shift_ + k * scale_);
      }
      for (double x : breakpoints) {
        if (x > lo && x < hi) cuts.push_back(x);
      }
      const boost::math::normal_distribution<double> gauss(shift_, scale_);
      return integrate_pieces(
          [&](double x) { return f(x) * boost::math::pdf(gauss, x); },
          std::move(cuts));
    }
    case Shape::dyadic: {
      CompensatedSum acc;
      const std::size_t terms = dyadic_terms();
      for (std::size_t k = 0; k < terms; ++k) {
        const double mass = 0.5 * (1.0 - rho_) * std::pow(rho_, k);
        const double offset = scale_ * std::ldexp(1.0, static_cast<int>(k));
        acc.add(mass * f(shift_ + offset));
        acc.add(mass * f(shift_ - offset));
      }
      return acc.value();
    }
  }
  return 0.0;
}

double ScalarLaw::prob_below(double x) const {
  switch (shape_) {
    case Shape::discrete: {
      const auto it = std::lower_bound(points_.begin(), points_.end(), x);
      if (it == points_.begin()) return 0.0;
      return cumulative_[static_cast<std::size_t>(it - points_.begin()) - 1];
    }
    case Shape::uniform:
      return std::clamp((x - lo_) / (hi_ - lo_), 0.0, 1.0);
    case Shape::normal:
      return boost::math::cdf(boost::math::normal_distribution<double>(shift_, scale_), x);
    case Shape::dyadic:
      return shifted(-x).mirrored_above();
  }
  return 0.0;
}

double ScalarLaw::prob_above(double x) const {
  switch (shape_) {
    case Shape::discrete: {
      const auto it = std::upper_bound(points_.begin(), points_.end(), x);
      if (it == points_.begin()) return 1.0;
      if (it == points_.end()) return 0.0;
      return 1.0 - cumulative_[static_cast<std::size_t>(it - points_.begin()) - 1];
    }
    case Shape::uniform:
      return std::clamp((hi_ - x) / (hi_ - lo_), 0.0, 1.0);
    case Shape::normal:
      return boost::math::cdf(boost::math::complement(
          boost::math::normal_distribution<double>(shift_, scale_), x));
    case Shape::dyadic: {
      // Positive branch: shift + s 2^k > x for all k >= k0.
      double mass = 0.0;
      int k0 = 0;
      while (k0 <= kMaxDyadicExponent &&
             shift_ + scale_ * std::ldexp(1.0, k0) <= x) {
        ++k0;
      }
      mass += 0.5 * std::pow(rho_, k0);
      // Negative branch: shift - s 2^k > x for k < k1.
      int k1 = 0;
      while (k1 <= kMaxDyadicExponent &&
             shift_ - scale_ * std::ldexp(1.0, k1) > x) {
        ++k1;
      }
      mass += 0.5 * (1.0 - std::pow(rho_, k1));
      return mass;
    }
  }
  return 0.0;
}

double ScalarLaw::mirrored_above() const {
  // P(X < 0) for the dyadic shape, via the reflection X -> -X.
  ScalarLaw reflected = *this;
  reflected.shift_ = -shift_;
  return reflected.prob_above(0.0);
}

double ScalarLaw::mean() const {
  switch (shape_) {
    case Shape::discrete:
      return expect([](double x) { return x; });
    case Shape::uniform:
      return 0.5 * (lo_ + hi_);
    case Shape::normal:
    case Shape::dyadic:
      return shift_;
  }
  return 0.0;
}

double ScalarLaw::variance() const {
  switch (shape_) {
    case Shape::discrete: {
      const double m = mean();
      return expect([m](double x) { return (x - m) * (x - m); });
    }
    case Shape::uniform:
      return (hi_ - lo_) * (hi_ - lo_) / 12.0;
    case Shape::normal:
      return scale_ * scale_;
    case Shape::dyadic:
      if (rho_ >= 0.25) return kInf;
      return scale_ * scale_ * (1.0 - rho_) / (1.0 - 4.0 * rho_);
  }
  return 0.0;
}

double ScalarLaw::exp_abs_moment(double gamma) const {
  if (!(gamma > 0.0)) throw ModelError("exponential moment needs gamma > 0");
  switch (shape_) {
    case Shape::discrete:
      return expect([gamma](double x) { return std::exp(gamma * std::abs(x)); });
    case Shape::uniform: {
      auto primitive = [gamma](double x) {
        // Antiderivative of exp(gamma |x|), continuous at 0.
        return x >= 0.0 ? std::expm1(gamma * x) / gamma
                        : -std::expm1(-gamma * x) / gamma;
      };
      return (primitive(hi_) - primitive(lo_)) / (hi_ - lo_);
    }
    case Shape::normal: {
      // Split at 0: E[e^{g X}; X > 0] + E[e^{-g X}; X < 0].
      const boost::math::normal_distribution<double> unit;
      const double m = shift_ / scale_;
      const double gs = gamma * scale_;
      return std::exp(gamma * shift_ + 0.5 * gs * gs) * boost::math::cdf(unit, m + gs) +
             std::exp(-gamma * shift_ + 0.5 * gs * gs) * boost::math::cdf(unit, -m + gs);
    }
    case Shape::dyadic:
      // rho^k exp(gamma s 2^k) diverges for every gamma > 0.
      return kInf;
  }
  return kInf;
}

double ScalarLaw::truncated_second_moment(double level) const {
  switch (shape_) {
    case Shape::discrete:
      return expect([level](double x) {
        return std::abs(x) >= level ? x * x : 0.0;
      });
    case Shape::uniform: {
      auto cube_integral = [](double a, double b) {
        return a < b ? (b * b * b - a * a * a) / 3.0 : 0.0;
      };
      const double l = std::max(level, 0.0);
      double total = 0.0;
      if (l == 0.0) {
        total = cube_integral(lo_, hi_);
      } else {
        total = cube_integral(std::max(lo_, l), hi_) +
                cube_integral(lo_, std::min(hi_, -l));
      }
      return total / (hi_ - lo_);
    }
    case Shape::normal: {
      const double l = std::max(level, 0.0);
      const std::vector<double> cuts{-l, l};
      return expect([l](double x) { return std::abs(x) >= l ? x * x : 0.0; }, cuts);
    }
    case Shape::dyadic: {
      if (rho_ >= 0.25) return kInf;
      CompensatedSum acc;
      for (int k = 0; k <= kMaxDyadicExponent; ++k) {
        const double mass = 0.5 * (1.0 - rho_) * std::pow(rho_, k);
        if (mass == 0.0) break;
        const double offset = scale_ * std::ldexp(1.0, k);
        for (double x : {shift_ + offset, shift_ - offset}) {
          if (std::abs(x) >= level) acc.add(mass * x * x);
        }
      }
      return acc.value();
    }
  }
  return 0.0;
}

double ScalarLaw::quantile(double u) const {
  switch (shape_) {
    case Shape::discrete: {
      const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
      const auto idx = std::min<std::size_t>(
          static_cast<std::size_t>(it - cumulative_.begin()), points_.size() - 1);
      return points_[idx];
    }
    case Shape::uniform:
      return lo_ + u * (hi_ - lo_);
    case Shape::normal:
      return boost::math::quantile(
          boost::math::normal_distribution<double>(shift_, scale_), u);
    case Shape::dyadic: {
      const bool negative = u < 0.5;
      const double w = negative ? 2.0 * u : 2.0 * (1.0 - u);
      // P(k >= j) = rho^j.
      double k = std::floor(std::log(std::max(w, 1e-300)) / std::log(rho_));
      k = std::clamp(k, 0.0, static_cast<double>(kMaxDyadicExponent));
      const double offset = scale_ * std::ldexp(1.0, static_cast<int>(k));
      return negative ? shift_ - offset : shift_ + offset;
    }
  }
  return 0.0;
}

double ScalarLaw::support_min() const {
  switch (shape_) {
    case Shape::discrete:
      return points_.front();
    case Shape::uniform:
      return lo_;
    case Shape::normal:
    case Shape::dyadic:
      return -kInf;
  }
  return -kInf;
}

double ScalarLaw::support_max() const {
  switch (shape_) {
    case Shape::discrete:
      return points_.back();
    case Shape::uniform:
      return hi_;
    case Shape::normal:
    case Shape::dyadic:
      return kInf;
  }
  return kInf;
}

std::string_view to_string(NoiseFamily family) noexcept {
  switch (family) {
    case NoiseFamily::finite_discrete:
      return "finite_discrete";
    case NoiseFamily::rademacher:
      return "rademacher";
    case NoiseFamily::standardized_uniform:
      return "standardized_uniform";
    case NoiseFamily::standardized_two_point:
      return "standardized_two_point";
    case NoiseFamily::dyadic_tails:
      return "dyadic_tails";
    case NoiseFamily::standard_normal:
      return "standard_normal";
  }
  return "unknown";
}

NoiseFamily noise_family_from_string(std::string_view name) {
  for (auto f : {NoiseFamily::finite_discrete, NoiseFamily::rademacher,
                 NoiseFamily::standardized_uniform,
                 NoiseFamily::standardized_two_point,
                 NoiseFamily::dyadic_tails, NoiseFamily::standard_normal}) {
    if (to_string(f) == name) return f;
  }
  throw ModelError("unknown noise family '" + std::string(name) + "'");
}

DistributionSpec DistributionSpec::finite_discrete(std::vector<double> points,
                                                   std::vector<double> probs) {
  ScalarLaw law = ScalarLaw::discrete(std::move(points), std::move(probs));
  if (std::abs(law.mean()) > kMomentTolerance ||
      std::abs(law.variance() - 1.0) > kMomentTolerance) {
    throw ModelError("noise law must have mean 0 and variance 1");
  }
  return {NoiseFamily::finite_discrete, std::move(law), 0.0};
}

DistributionSpec DistributionSpec::rademacher() {
  return {NoiseFamily::rademacher, ScalarLaw::discrete({-1.0, 1.0}, {0.5, 0.5}),
          0.0};
}

DistributionSpec DistributionSpec::standardized_uniform() {
  const double half_width = std::sqrt(3.0);
  return {NoiseFamily::standardized_uniform,
          ScalarLaw::uniform(-half_width, half_width), 0.0};
}

DistributionSpec DistributionSpec::standardized_two_point(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ModelError("two-point parameter p must lie in (0, 1)");
  }
  const double q = 1.0 - p;
  return {NoiseFamily::standardized_two_point,
          ScalarLaw::discrete({std::sqrt(q / p), -std::sqrt(p / q)}, {p, q}), p};
}

DistributionSpec DistributionSpec::dyadic_tails(double rho) {
  if (!(rho > 0.0 && rho < 0.25)) {
    throw ModelError("dyadic_tails needs rho in (0, 1/4) for finite variance");
  }
  const double scale = std::sqrt((1.0 - 4.0 * rho) / (1.0 - rho));
  return {NoiseFamily::dyadic_tails, ScalarLaw::dyadic(scale, rho), rho};
}

DistributionSpec DistributionSpec::standard_normal() {
  return {NoiseFamily::standard_normal, ScalarLaw::normal(0.0, 1.0), 0.0};
}

}  // namespace apm
