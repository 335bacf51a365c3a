#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <span>
#include <vector>

#include "cheegerlab/error.hpp"
#include "cheegerlab/numerics/summation.hpp"

namespace cheegerlab::numerics {

struct QuadratureOptions {
  /// Absolute tolerance, scaled by (1 + |result|).
  double abs_tol = 1e-10;
  double rel_tol = 1e-9;
  std::size_t max_intervals = 4000;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t intervals = 0;
  std::size_t evaluations = 0;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15 abscissae).
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the nodes kKronrodNodes[1], [3], [5], [7].
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  std::size_t order; // creation index; breaks ties deterministically
};

struct PanelLess {
  bool operator()(const Panel& x, const Panel& y) const {
    if (x.error != y.error) return x.error < y.error;
    return x.order > y.order;
  }
};

template <class F>
Panel gauss_kronrod_15(F&& f, double a, double b, std::size_t order) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    kronrod += kKronrodWeights[j] * (f1 + f2);
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * (f1 + f2);
  }
  return Panel{a, b, kronrod * half, std::abs((kronrod - gauss) * half), order};
}

} // namespace detail

/// Globally adaptive Gauss–Kronrod (7/15) quadrature of f over [a, b].
///
/// `breakpoints` (any order, values outside (a, b) ignored) seed the initial
/// panel split, so piecewise-smooth integrands never straddle a knot. The
/// panel with the largest error estimate is bisected until
/// err <= max(abs_tol * (1 + |I|), rel_tol * |I|). Throws QuadratureError
/// carrying the achieved estimate when the interval budget runs out.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, const QuadratureOptions& opt = {},
                           std::span<const double> breakpoints = {}) {
  if (a == b) return {};
  if (!(a < b)) throw DomainError("integrate: expected a < b");

  std::vector<double> cuts{a};
  for (double x : breakpoints)
    if (x > a && x < b) cuts.push_back(x);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<detail::Panel, std::vector<detail::Panel>, detail::PanelLess> queue;
  std::size_t order = 0;
  double total = 0.0;
  double total_err = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto p = detail::gauss_kronrod_15(f, cuts[i], cuts[i + 1], order++);
    total += p.value;
    total_err += p.error;
    queue.push(p);
  }
  const std::size_t budget = std::max(opt.max_intervals, 2 * cuts.size() + 64);

  auto tolerance = [&](double value) {
    return std::max(opt.abs_tol * (1.0 + std::abs(value)), opt.rel_tol * std::abs(value));
  };

  while (total_err > tolerance(total)) {
    if (queue.size() >= budget) throw QuadratureError("integrate: interval budget exhausted", total_err);
    const detail::Panel worst = queue.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b))
      throw QuadratureError("integrate: panel width underflow", total_err);
    queue.pop();
    auto left = detail::gauss_kronrod_15(f, worst.a, mid, order++);
    auto right = detail::gauss_kronrod_15(f, mid, worst.b, order++);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    queue.push(left);
    queue.push(right);
    if (!std::isfinite(total)) throw QuadratureError("integrate: non-finite integrand", total_err);
  }

  // Re-sum the final panels in position order so the result does not carry
  // the running-update rounding history.
  std::vector<detail::Panel> panels;
  panels.reserve(queue.size());
  while (!queue.empty()) {
    panels.push_back(queue.top());
    queue.pop();
  }
  std::sort(panels.begin(), panels.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
  std::vector<double> values(panels.size()), errors(panels.size());
  for (std::size_t i = 0; i < panels.size(); ++i) {
    values[i] = panels[i].value;
    errors[i] = panels[i].error;
  }
  return QuadratureResult{pairwise_sum(values), pairwise_sum(errors), panels.size(), 15 * order};
}

} // namespace cheegerlab::numerics
