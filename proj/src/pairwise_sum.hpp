#pragma once

#include <cstddef>
#include <span>

namespace illum::detail {

// Recursive pairwise summation. The split points depend only on the length,
// so a given input order always produces the same rounding.
inline double pairwise_sum(std::span<const double> v) {
  constexpr std::size_t kBlock = 8;
  if (v.size() <= kBlock) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace illum::detail
