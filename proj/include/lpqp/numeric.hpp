#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace lpqp {

/// log(sum exp(v)) with max-subtraction. Empty input yields -infinity.
inline double log_sum_exp(const std::vector<double>& v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

/// Turns a log-weight vector into a normalized distribution in place.
inline void exp_normalize(std::vector<double>& logw) {
  const double lz = log_sum_exp(logw);
  for (double& x : logw) x = std::exp(x - lz);
}

/// Shifts a log vector so its max element is zero.
inline void normalize_max_zero(std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  for (double& x : v) x -= m;
}

}  // namespace lpqp
