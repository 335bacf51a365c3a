#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "cheegerlab/error.hpp"

namespace cheegerlab::numerics {

/// C² cubic interpolating spline on a strictly increasing grid.
///
/// End conditions prescribe the second derivative at both ends, taken from
/// the cubic through the four nearest samples, so the spline reproduces
/// cubics exactly and does not force S'' = 0 at the ends.
class CubicSpline {
public:
  CubicSpline() = default;

  CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    if (x_.size() != y_.size()) throw ParseError("spline: x and y sizes differ");
    if (x_.size() < 4) throw ParseError("spline: at least 4 samples required");
    for (std::size_t i = 0; i + 1 < x_.size(); ++i)
      if (!(x_[i + 1] > x_[i])) throw ParseError("spline: abscissae must be strictly increasing");
    for (double v : y_)
      if (!std::isfinite(v)) throw ParseError("spline: non-finite sample");
    solve_moments();
    build_cumulative_integral();
  }

  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }
  std::span<const double> knots() const { return x_; }
  std::span<const double> samples() const { return y_; }

  double value(double x) const {
    const auto [i, h, u] = locate(x);
    const double v = h - u;
    return m_[i] * v * v * v / (6 * h) + m_[i + 1] * u * u * u / (6 * h) +
           (y_[i] / h - m_[i] * h / 6) * v + (y_[i + 1] / h - m_[i + 1] * h / 6) * u;
  }

  double derivative(double x) const {
    const auto [i, h, u] = locate(x);
    const double v = h - u;
    return -m_[i] * v * v / (2 * h) + m_[i + 1] * u * u / (2 * h) - (y_[i] / h - m_[i] * h / 6) +
           (y_[i + 1] / h - m_[i + 1] * h / 6);
  }

  double second_derivative(double x) const {
    const auto [i, h, u] = locate(x);
    return (m_[i] * (h - u) + m_[i + 1] * u) / h;
  }

  /// ∫ from x_min to x of the spline, exact for the piecewise cubic.
  double integral(double x) const {
    const auto [i, h, u] = locate(x);
    return cumulative_[i] + piece_integral(i, u);
  }

private:
  struct Location {
    std::size_t index;
    double width;
    double offset;
  };

  Location locate(double x) const {
    if (!(x >= x_.front() && x <= x_.back())) throw DomainError("spline: argument outside table");
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - x_.begin());
    i = std::clamp<std::size_t>(i, 1, x_.size() - 1) - 1;
    return {i, x_[i + 1] - x_[i], x - x_[i]};
  }

  double piece_integral(std::size_t i, double u) const {
    const double h = x_[i + 1] - x_[i];
    const double v = h - u;
    const double c1 = y_[i] / h - m_[i] * h / 6;
    const double c2 = y_[i + 1] / h - m_[i + 1] * h / 6;
    return m_[i] * (h * h * h * h - v * v * v * v) / (24 * h) + m_[i + 1] * u * u * u * u / (24 * h) +
           c1 * (h * h - v * v) / 2 + c2 * u * u / 2;
  }

  // Second derivative at x[0] of the cubic through samples idx[0..3].
  static double end_curvature(const double* xs, const double* ys) {
    const double d01 = (ys[1] - ys[0]) / (xs[1] - xs[0]);
    const double d12 = (ys[2] - ys[1]) / (xs[2] - xs[1]);
    const double d23 = (ys[3] - ys[2]) / (xs[3] - xs[2]);
    const double d012 = (d12 - d01) / (xs[2] - xs[0]);
    const double d123 = (d23 - d12) / (xs[3] - xs[1]);
    const double d0123 = (d123 - d012) / (xs[3] - xs[0]);
    return 2 * d012 + 2 * (2 * xs[0] - xs[1] - xs[2]) * d0123;
  }

  void solve_moments() {
    const std::size_t n = x_.size();
    m_.assign(n, 0.0);
    m_.front() = end_curvature(x_.data(), y_.data());
    {
      const double xs[4] = {x_[n - 1], x_[n - 2], x_[n - 3], x_[n - 4]};
      const double ys[4] = {y_[n - 1], y_[n - 2], y_[n - 3], y_[n - 4]};
      m_.back() = end_curvature(xs, ys);
    }
    if (n == 2) return;
    // Thomas algorithm on the interior moment equations.
    const std::size_t k = n - 2;
    std::vector<double> diag(k), upper(k), rhs(k);
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t i = j + 1;
      const double h0 = x_[i] - x_[i - 1];
      const double h1 = x_[i + 1] - x_[i];
      diag[j] = 2 * (h0 + h1);
      upper[j] = h1;
      rhs[j] = 6 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
      if (j == 0) rhs[j] -= h0 * m_.front();
      if (j == k - 1) rhs[j] -= h1 * m_.back();
    }
    for (std::size_t j = 1; j < k; ++j) {
      const double lower = x_[j + 1] - x_[j];
      const double w = lower / diag[j - 1];
      diag[j] -= w * upper[j - 1];
      rhs[j] -= w * rhs[j - 1];
    }
    m_[k] = rhs[k - 1] / diag[k - 1];
    for (std::size_t j = k - 1; j-- > 0;) m_[j + 1] = (rhs[j] - upper[j] * m_[j + 2]) / diag[j];
  }

  void build_cumulative_integral() {
    cumulative_.assign(x_.size(), 0.0);
    for (std::size_t i = 0; i + 1 < x_.size(); ++i)
      cumulative_[i + 1] = cumulative_[i] + piece_integral(i, x_[i + 1] - x_[i]);
  }

  std::vector<double> x_, y_, m_, cumulative_;
};

} // namespace cheegerlab::numerics
