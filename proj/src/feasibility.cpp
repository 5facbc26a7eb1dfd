#include "apm/feasibility.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace apm {

namespace {

constexpr double kPivotTolerance = 1e-11;

}  // namespace

std::optional<std::vector<double>> find_nonnegative_payoff(
    std::span<const double> a, std::size_t rows, std::size_t cols) {
  if (a.size() != rows * cols) {
    throw std::invalid_argument("find_nonnegative_payoff: shape mismatch");
  }
  if (rows == 0 || cols == 0) return std::nullopt;

  // Variables: p (cols), q (cols), r (rows), artificial (1); x = p - q.
  //   rows 0..n-1:  -A_s p + A_s q + r_s = 0
  //   row n:        sum_s A_s p - sum_s A_s q + art = 1
  // Minimizing art from the basis {r, art}.
  const std::size_t n_var = 2 * cols + rows + 1;
  const std::size_t n_row = rows + 1;
  const std::size_t width = n_var + 1;  // last column holds the rhs
  std::vector<double> t(n_row * width, 0.0);
  auto at = [&](std::size_t r, std::size_t c) -> double& { return t[r * width + c]; };

  for (std::size_t s = 0; s < rows; ++s) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double v = a[s * cols + j];
      at(s, j) = -v;
      at(s, cols + j) = v;
      at(rows, j) += v;
      at(rows, cols + j) -= v;
    }
    at(s, 2 * cols + s) = 1.0;
  }
  at(rows, n_var - 1) = 1.0;
  at(rows, n_var) = 1.0;

  std::vector<std::size_t> basis(n_row);
  for (std::size_t s = 0; s < rows; ++s) basis[s] = 2 * cols + s;
  basis[rows] = n_var - 1;

  // Phase-one cost: 1 on the artificial variable.
  std::vector<double> cost(n_var, 0.0);
  cost[n_var - 1] = 1.0;

  const std::size_t max_iter = 50 * (n_row + n_var);
  std::vector<double> reduced(n_var);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    for (std::size_t j = 0; j < n_var; ++j) {
      double d = cost[j];
      for (std::size_t r = 0; r < n_row; ++r) d -= cost[basis[r]] * at(r, j);
      reduced[j] = d;
    }
    std::size_t entering = n_var;
    for (std::size_t j = 0; j < n_var; ++j) {
      if (reduced[j] < -kPivotTolerance) {
        entering = j;
        break;
      }
    }
    if (entering == n_var) break;

    std::size_t leaving = n_row;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < n_row; ++r) {
      const double coef = at(r, entering);
      if (coef > kPivotTolerance) {
        const double ratio = at(r, n_var) / coef;
        if (ratio < best_ratio - 1e-15 ||
            (std::abs(ratio - best_ratio) <= 1e-15 && leaving < n_row &&
             basis[r] < basis[leaving])) {
          best_ratio = ratio;
          leaving = r;
        }
      }
    }
    if (leaving == n_row) break;  // unbounded direction cannot occur in phase one

    const double pivot = at(leaving, entering);
    for (std::size_t c = 0; c < width; ++c) at(leaving, c) /= pivot;
    for (std::size_t r = 0; r < n_row; ++r) {
      if (r == leaving) continue;
      const double factor = at(r, entering);
      if (factor == 0.0) continue;
      for (std::size_t c = 0; c < width; ++c) at(r, c) -= factor * at(leaving, c);
    }
    basis[leaving] = entering;
  }

  double artificial = 0.0;
  std::vector<double> x(cols, 0.0);
  for (std::size_t r = 0; r < n_row; ++r) {
    const std::size_t v = basis[r];
    const double value = at(r, n_var);
    if (v == n_var - 1) artificial = value;
    if (v < cols) x[v] += value;
    if (v >= cols && v < 2 * cols) x[v - cols] -= value;
  }
  if (artificial > 1e-9) return std::nullopt;

  // Confirm against the original rows.
  double total = 0.0;
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return std::nullopt;
  for (std::size_t s = 0; s < rows; ++s) {
    double payoff = 0.0;
    for (std::size_t j = 0; j < cols; ++j) payoff += a[s * cols + j] * x[j];
    if (payoff < -1e-9 * scale) return std::nullopt;
    total += payoff;
  }
  if (total <= 1e-9) return std::nullopt;
  return x;
}

}  // namespace apm
