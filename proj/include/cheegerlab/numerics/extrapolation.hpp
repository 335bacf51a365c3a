#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace cheegerlab::numerics {

/// Tail estimate of lim_{r->∞} g(r) from samples at geometrically spaced radii.
struct LimitEstimate {
  std::vector<double> radii;
  std::vector<double> values;
  double last = 0.0;
  /// Empty when the tail is not Cauchy within tolerance; no value is invented.
  std::optional<double> extrapolated;
  double error_estimate = 0.0;
  bool converged = false;
  /// Ratio of the last two successive differences (|ratio| < 1 for a
  /// geometrically converging tail).
  double contraction = 0.0;
};

namespace detail {

inline std::optional<double> aitken(double x0, double x1, double x2) {
  const double d1 = x1 - x0;
  const double d2 = x2 - x1;
  const double denom = d2 - d1;
  if (denom == 0.0 || !std::isfinite(denom)) return std::nullopt;
  return x2 - d2 * d2 / denom;
}

} // namespace detail

/// Radii r_max / 2^k for k = doublings .. 0, increasing.
inline std::vector<double> geometric_probe_radii(double r_max, int doublings) {
  std::vector<double> radii;
  for (int k = doublings; k >= 0; --k) radii.push_back(std::ldexp(r_max, -k));
  return radii;
}

/// Aitken Δ² extrapolation of a sampled tail.
///
/// Convergence is declared when the last two Aitken values agree to
/// `rel_tol * max(1, |L|)`, or when the raw samples themselves have already
/// settled to that tolerance. A non-contracting tail (|Δ_k/Δ_{k-1}| >= 1)
/// that has not settled is reported as divergent.
inline LimitEstimate extrapolate_limit(std::span<const double> radii, std::span<const double> values,
                                       double rel_tol = 1e-6) {
  LimitEstimate est;
  est.radii.assign(radii.begin(), radii.end());
  est.values.assign(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n == 0) return est;
  est.last = values[n - 1];
  if (n < 3) return est;

  auto scale = [](double v) { return std::max(1.0, std::abs(v)); };
  const double d_prev = values[n - 2] - values[n - 3];
  const double d_last = values[n - 1] - values[n - 2];
  est.contraction = d_prev != 0.0 ? d_last / d_prev : 0.0;

  if (!std::isfinite(est.last)) return est;

  // Samples already settled: the raw tail is its own limit.
  if (std::abs(d_last) <= rel_tol * scale(est.last) && std::abs(d_prev) <= 10 * rel_tol * scale(est.last)) {
    est.extrapolated = est.last;
    est.error_estimate = std::abs(d_last);
    est.converged = true;
    return est;
  }
  if (std::abs(est.contraction) >= 1.0 || n < 4) {
    est.error_estimate = std::abs(d_last);
    return est;
  }

  const auto a_last = detail::aitken(values[n - 3], values[n - 2], values[n - 1]);
  const auto a_prev = detail::aitken(values[n - 4], values[n - 3], values[n - 2]);
  if (!a_last || !a_prev) {
    est.error_estimate = std::abs(d_last);
    return est;
  }
  est.error_estimate = std::abs(*a_last - *a_prev);
  if (est.error_estimate <= rel_tol * scale(*a_last)) {
    est.extrapolated = *a_last;
    est.converged = true;
  }
  return est;
}

/// Samples g at geometric probe radii and extrapolates.
inline LimitEstimate estimate_limit(const std::function<double(double)>& g, double r_max,
                                    int doublings = 6, double rel_tol = 1e-6) {
  const auto radii = geometric_probe_radii(r_max, doublings);
  std::vector<double> values;
  values.reserve(radii.size());
  for (double r : radii) values.push_back(g(r));
  return extrapolate_limit(radii, values, rel_tol);
}

} // namespace cheegerlab::numerics
