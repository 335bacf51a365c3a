#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "cheegerlab/numerics/extrapolation.hpp"
#include "cheegerlab/numerics/ode.hpp"
#include "cheegerlab/numerics/quadrature.hpp"
#include "cheegerlab/numerics/spline.hpp"
#include "cheegerlab/numerics/summation.hpp"

using namespace cheegerlab;
using namespace cheegerlab::numerics;

TEST(Quadrature, PolynomialIsExactOnOnePanel) {
  auto res = integrate([](double x) { return x * x * x * x; }, 0.0, 2.0);
  EXPECT_NEAR(res.value, 32.0 / 5.0, 1e-13);
  EXPECT_EQ(res.intervals, 1u);
}

TEST(Quadrature, EndpointSpikeIsResolved) {
  // ∫_0^50 e^{t² - 2500} dt, a spike of width 0.01 at the right end.
  auto f = [](double t) { return std::exp(t * t - 2500.0); };
  std::vector<double> cuts;
  for (int j = 1; j <= 40; ++j) cuts.push_back(50.0 - std::ldexp(50.0, -j));
  auto res = integrate(f, 0.0, 50.0, {}, cuts);
  // Oracle: asymptotic series 1/(2r) Σ (2k-1)!!/(2r²)^k, terms below 1e-16 dropped.
  const double r = 50.0;
  const double u = 1 / (2 * r * r);
  EXPECT_NEAR(res.value, 1.0 / (2 * r) * (1 + u + 3 * u * u + 15 * u * u * u), 1e-14);
}

TEST(Quadrature, BudgetExhaustionReportsEstimate) {
  QuadratureOptions opt;
  opt.max_intervals = 3;
  opt.rel_tol = 1e-15;
  opt.abs_tol = 1e-300;
  try {
    integrate([](double x) { return std::sin(1.0 / (x + 1e-3)); }, 0.0, 1.0, opt);
    FAIL() << "expected QuadratureError";
  } catch (const QuadratureError& e) {
    EXPECT_GT(e.error_estimate, 0.0);
  }
}

TEST(Ode, ExponentialGrowth) {
  const std::vector<double> out = {0.5, 1.0, 2.0};
  auto y = integrate_ode([](double, double v) { return v; }, 0.0, 1.0, out);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(y[i] / std::exp(out[i]), 1.0, 1e-10);
}

TEST(Ode, QuadratureOfRhs) {
  const std::vector<double> out = {std::numbers::pi};
  auto y = integrate_ode([](double t, double) { return std::sin(t); }, 0.0, 0.0, out);
  EXPECT_NEAR(y[0], 2.0, 1e-10);
}

TEST(Spline, ReproducesCubicsExactly) {
  std::vector<double> x, y;
  for (int i = 0; i <= 12; ++i) {
    const double t = 0.3 * i + 0.01 * i * i;
    x.push_back(t);
    y.push_back(t * t * t - 2 * t + 1);
  }
  CubicSpline s(x, y);
  for (double t : {0.05, 0.77, 1.9, 4.4}) {
    EXPECT_NEAR(s.value(t), t * t * t - 2 * t + 1, 1e-10);
    EXPECT_NEAR(s.derivative(t), 3 * t * t - 2, 1e-9);
    EXPECT_NEAR(s.second_derivative(t), 6 * t, 1e-8);
    EXPECT_NEAR(s.integral(t), t * t * t * t / 4 - t * t + t, 1e-10);
  }
}

TEST(Spline, RejectsBadTables) {
  EXPECT_THROW(CubicSpline({0, 1, 1, 2}, {0, 1, 2, 3}), ParseError);
  EXPECT_THROW(CubicSpline({0, 1, 2}, {0, 1, 2}), ParseError);
  CubicSpline s({0, 1, 2, 3}, {0, 1, 2, 3});
  EXPECT_THROW(s.value(3.5), DomainError);
}

TEST(Extrapolation, GeometricTailToZero) {
  auto est = estimate_limit([](double r) { return 2.0 / r; }, 40.0);
  ASSERT_TRUE(est.converged);
  EXPECT_NEAR(*est.extrapolated, 0.0, 1e-12);
}

TEST(Extrapolation, DivergentTailIsNotFabricated) {
  auto est = estimate_limit([](double r) { return 2.0 * r; }, 40.0);
  EXPECT_FALSE(est.converged);
  EXPECT_FALSE(est.extrapolated.has_value());
}

TEST(Extrapolation, OscillatingTailIsNotFabricated) {
  auto est = estimate_limit([](double r) { return std::sin(r); }, 40.0);
  EXPECT_FALSE(est.converged);
}

TEST(Summation, PairwiseMatchesExactSmallSums) {
  std::vector<double> v(1000, 0.1);
  EXPECT_NEAR(pairwise_sum(v), 100.0, 1e-12);
  auto p = compensated_prefix_sums(v);
  EXPECT_NEAR(p.back(), 100.0, 1e-12);
}
