#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace apm {

/// Searches for x with (A x)_s >= 0 for every row and sum_s (A x)_s = 1,
/// i.e. a nonnegative, somewhere-positive payoff. `a` is row-major with
/// `rows` x `cols` entries. Solved as the phase-one problem of a dense
/// simplex with Bland's rule; returns nullopt when the system is infeasible.
std::optional<std::vector<double>> find_nonnegative_payoff(
    std::span<const double> a, std::size_t rows, std::size_t cols);

}  // namespace apm
