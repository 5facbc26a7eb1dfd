#pragma once

// Shared generators and brute-force oracles for the test suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "apm/market.hpp"

namespace testing_support {

/// Seeded generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }
  std::vector<double> vector(std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (double& x : v) x = uniform(lo, hi);
    return v;
  }

 private:
  std::mt19937_64 rng_;
};

/// E[f(eps)] for i.i.d. Rademacher eps in R^k by looping over all 2^k sign
/// patterns; bit j of the mask is the sign of coordinate j.
inline double rademacher_expectation(std::size_t k,
                                     const std::function<double(const std::vector<double>&)>& f) {
  std::vector<double> eps(k);
  double total = 0.0;
  const std::size_t patterns = std::size_t{1} << k;
  for (std::size_t mask = 0; mask < patterns; ++mask) {
    for (std::size_t j = 0; j < k; ++j) eps[j] = (mask >> j) & 1u ? 1.0 : -1.0;
    total += f(eps);
  }
  return total / static_cast<double>(patterns);
}

/// Appendix power utility written out independently of the library.
inline double appendix_u(double alpha, double x) {
  return x <= 0.0 ? alpha * x : std::pow(x + 1.0, alpha) - 1.0;
}

/// Max over the cube [-half_width, half_width]^3 (grid step `step`) of
/// E[sqrt(1 + V) - 1 or V / 2] for Rademacher noise, i.e. the appendix power
/// utility with alpha = 1/2.
inline double grid_max_sqrt_k3(const double b[3], double step, double half_width) {
  double x[8][3];
  for (int mask = 0; mask < 8; ++mask) {
    for (int j = 0; j < 3; ++j) x[mask][j] = ((mask >> j) & 1 ? 1.0 : -1.0) - b[j];
  }
  const int n = static_cast<int>(std::lround(half_width / step));
  double best = -1e300;
  for (int i = -n; i <= n; ++i) {
    const double p0 = i * step;
    for (int j = -n; j <= n; ++j) {
      const double p1 = j * step;
      for (int k = -n; k <= n; ++k) {
        const double p2 = k * step;
        double total = 0.0;
        for (int mask = 0; mask < 8; ++mask) {
          const double v = p0 * x[mask][0] + p1 * x[mask][1] + p2 * x[mask][2];
          total += v <= 0.0 ? 0.5 * v : std::sqrt(1.0 + v) - 1.0;
        }
        best = std::max(best, total / 8.0);
      }
    }
  }
  return best;
}

}  // namespace testing_support
