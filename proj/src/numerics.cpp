#include "apm/numerics.hpp"

namespace apm {

void for_each_block(std::size_t n, std::size_t workers,
                    const std::function<void(std::size_t, std::size_t,
                                             std::size_t)>& fn) {
  const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
  const std::size_t threads = std::max<std::size_t>(
      1, std::min(resolve_workers(workers), blocks));
  auto run = [&](std::size_t first) {
    for (std::size_t b = first; b < blocks; b += threads) {
      const std::size_t begin = b * kReductionBlock;
      fn(b, begin, std::min(n, begin + kReductionBlock));
    }
  };
  if (threads == 1) {
    run(0);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads - 1);
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(run, t);
  run(0);
}

namespace {

double pairwise(std::span<const double> parts) {
  if (parts.size() == 1) return parts[0];
  const std::size_t half = parts.size() / 2;
  return pairwise(parts.first(half)) + pairwise(parts.subspan(half));
}

}  // namespace

double deterministic_sum(std::size_t n, std::size_t workers,
                         const std::function<double(std::size_t)>& term) {
  if (n == 0) return 0.0;
  std::vector<double> partial((n + kReductionBlock - 1) / kReductionBlock);
  for_each_block(n, workers, [&](std::size_t b, std::size_t begin,
                                 std::size_t end) {
    CompensatedSum acc;
    for (std::size_t i = begin; i < end; ++i) acc.add(term(i));
    partial[b] = acc.value();
  });
  return pairwise(partial);
}

std::vector<double> deterministic_vector_sum(
    std::size_t n, std::size_t dim, std::size_t workers,
    const std::function<void(std::size_t, std::span<double>)>& term) {
  std::vector<double> result(dim, 0.0);
  if (n == 0 || dim == 0) return result;
  const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> partial(blocks * dim, 0.0);
  for_each_block(n, workers, [&](std::size_t b, std::size_t begin,
                                 std::size_t end) {
    std::vector<CompensatedSum> acc(dim);
    std::vector<double> scratch(dim);
    for (std::size_t i = begin; i < end; ++i) {
      std::fill(scratch.begin(), scratch.end(), 0.0);
      term(i, scratch);
      for (std::size_t d = 0; d < dim; ++d) acc[d].add(scratch[d]);
    }
    for (std::size_t d = 0; d < dim; ++d) partial[b * dim + d] = acc[d].value();
  });
  std::vector<double> column(blocks);
  for (std::size_t d = 0; d < dim; ++d) {
    for (std::size_t b = 0; b < blocks; ++b) column[b] = partial[b * dim + d];
    result[d] = pairwise(column);
  }
  return result;
}

double l2_norm(std::span<const double> v) noexcept {
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x / scale) * (x / scale);
  return scale * std::sqrt(s);
}

std::size_t resolve_workers(std::size_t requested) noexcept {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace apm
