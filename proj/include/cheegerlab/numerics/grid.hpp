#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "cheegerlab/error.hpp"

namespace cheegerlab::numerics {

/// n points from a to b inclusive, evenly spaced.
inline std::vector<double> linear_grid(double a, double b, std::size_t n) {
  if (n < 2 || !(a < b)) throw DomainError("linear_grid: need n >= 2 and a < b");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  g.back() = b;
  return g;
}

/// n points from a to b inclusive, evenly spaced in log r.
inline std::vector<double> log_grid(double a, double b, std::size_t n) {
  if (n < 2 || !(a > 0.0) || !(a < b)) throw DomainError("log_grid: need n >= 2 and 0 < a < b");
  std::vector<double> g(n);
  const double la = std::log(a);
  const double lb = std::log(b);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = std::exp(la + (lb - la) * static_cast<double>(i) / static_cast<double>(n - 1));
  g.front() = a;
  g.back() = b;
  return g;
}

} // namespace cheegerlab::numerics
