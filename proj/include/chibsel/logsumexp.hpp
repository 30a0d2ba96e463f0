#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace chibsel {

/// log sum_i exp(v_i), shifted by the maximum. -inf for an empty input.
inline double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

inline double log_mean_exp(std::span<const double> v) {
  return log_sum_exp(v) - std::log(static_cast<double>(v.size()));
}

}  // namespace chibsel
