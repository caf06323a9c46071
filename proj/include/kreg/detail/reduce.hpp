#pragma once

#include <cstddef>
#include <span>

namespace kreg::detail {

/// Fixed-shape pairwise summation tree. The reduction order depends only on
/// the element count, never on thread count or scheduling, so parallel
/// callers that fill a partial-sum array indexed by work item get results
/// that are bitwise identical for any number of workers.
template <typename T>
T pairwise_sum(std::span<const T> xs) {
  const size_t n = xs.size();
  if (n == 0) return T{};
  if (n <= 8) {
    T acc = xs[0];
    for (size_t i = 1; i < n; ++i) acc = acc + xs[i];
    return acc;
  }
  const size_t half = n / 2;
  return pairwise_sum(xs.subspan(0, half)) + pairwise_sum(xs.subspan(half));
}

}  // namespace kreg::detail
