#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <thread>
#include <vector>

namespace apm {

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Scenario blocks have a fixed size so that reductions combine the same
/// partial sums in the same order whatever the worker count.
inline constexpr std::size_t kReductionBlock = 4096;

/// Runs fn(begin, end) over fixed-size blocks of [0, n) on up to `workers`
/// threads. Blocks are assigned round-robin; fn must only write to
/// block-local state.
void for_each_block(std::size_t n, std::size_t workers,
                    const std::function<void(std::size_t block,
                                             std::size_t begin,
                                             std::size_t end)>& fn);

/// Deterministic sum of term(i) for i in [0, n): compensated within each
/// fixed block, block partials combined pairwise in index order.
double deterministic_sum(std::size_t n, std::size_t workers,
                         const std::function<double(std::size_t)>& term);

/// Vector-valued variant: accumulates term(i, out) into `dim` outputs.
std::vector<double> deterministic_vector_sum(
    std::size_t n, std::size_t dim, std::size_t workers,
    const std::function<void(std::size_t, std::span<double>)>& term);

double l2_norm(std::span<const double> v) noexcept;

/// Worker count from a user request; 0 means hardware concurrency.
std::size_t resolve_workers(std::size_t requested) noexcept;

}  // namespace apm
