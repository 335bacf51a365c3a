#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "cheegerlab/constellation.hpp"
#include "cheegerlab/iso_comparison.hpp"
#include "cheegerlab/numerics/grid.hpp"
#include "oracles.hpp"

using namespace cheegerlab;

namespace {

std::vector<double> example_grid() { return numerics::log_grid(1e-3, 50.0, 1000); }

// Composite Simpson with n panels; test-side reference integrator.
template <class F>
double simpson(F f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4 : 2);
  return s * h / 3;
}

double coth(double x) { return oracle::series_cosh(x) / oracle::series_sinh(x); }

} // namespace

TEST(BoundingFunction, HabPairMatchesDirectFormula) {
  const auto h = BoundingFunction::hab(-4.0, -1.0);
  for (int m : {2, 3, 5})
    for (double r : {0.2, 1.0, 3.0, 8.0}) {
      const double direct = (m - 1.0) / m * (2 * coth(2 * r) - coth(r));
      EXPECT_NEAR(h.value(r, m), direct, 1e-13) << "m=" << m << " r=" << r;
    }
}

TEST(BoundingFunction, HabPairStableNearCentre) {
  const auto h = BoundingFunction::hab(-4.0, -1.0);
  // Leading term: ((m-1)/m)(s_a² - s_b²) r / 3.
  for (double r : {1e-9, 1e-6, 1e-3})
    EXPECT_NEAR(h.value(r, 2) / (0.5 * 3 * r / 3), 1.0, 1e-5) << "r=" << r;
  EXPECT_EQ(h.value(0.0, 2), 0.0);
  EXPECT_NEAR(h.derivative(0.0, 2), 0.5, 1e-15);
}

TEST(BoundingFunction, HabPairDerivativeAndIntegral) {
  const auto h = BoundingFunction::hab(-2.5, -0.3);
  const int m = 3;
  for (double r : {0.05, 0.09, 0.11, 0.7, 4.0, 30.0}) {
    const double step = 1e-5 * std::max(1.0, r);
    const double fd = (h.value(r + step, m) - h.value(r - step, m)) / (2 * step);
    EXPECT_NEAR(h.derivative(r, m), fd, 1e-7) << "r=" << r;
    const double ref = simpson([&](double t) { return h.value(t, m); }, 0.0, r);
    EXPECT_NEAR(h.integral(r, m), ref, 1e-10 * std::max(1.0, ref)) << "r=" << r;
  }
}

TEST(BoundingFunction, Validation) {
  EXPECT_THROW(BoundingFunction::hab(-1.0, -2.0), DomainError);
  EXPECT_THROW(BoundingFunction::hab(-1.0, 0.5), DomainError);
  EXPECT_THROW(BoundingFunction::constant(NAN), DomainError);
  EXPECT_THROW(BoundingFunction::tabulated({0, 1, 2}, {0, 1, 2}), ParseError);
  EXPECT_NO_THROW(BoundingFunction::hab(-1.0, 0.0));
}

TEST(ConstructW, ZeroBoundReturnsIntermediaryExactly) {
  for (const auto& w : {WarpingFunction::space_form(-1), WarpingFunction::named("exp-r2")}) {
    const auto space = construct_W(2, w, BoundingFunction::zero(), 20.0);
    EXPECT_TRUE(space.W.same_profile(w));
    for (double r : {1e-4, 0.5, 3.0, 19.0}) {
      EXPECT_EQ(space.W.value(r), w.value(r));
      EXPECT_EQ(space.W.eta(r), w.eta(r));
    }
  }
}

TEST(ConstructW, ConstantBoundClosedForm) {
  const auto space = construct_W(2, WarpingFunction::space_form(0), BoundingFunction::constant(0.5), 5.0);
  EXPECT_NEAR(space.W.value(1.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(space.W.value(1.0), 0.3679, 1e-4);
  EXPECT_NEAR(space.W.eta(2.0), 0.5 - 1.0, 1e-15);
  EXPECT_EQ(space.W.value(0.0), 0.0);
  EXPECT_EQ(space.W.derivative(0.0), 1.0);
  EXPECT_LE(space.cross_check_max_rel, 1e-7);
}

TEST(ConstructW, HabPairGivesSmallerCurvatureSpaceForm) {
  // Intermediary w_a with h_{a,b} produces W = w_b.
  for (int m : {2, 3, 4}) {
    const auto space = construct_W(m, WarpingFunction::space_form(-4), BoundingFunction::hab(-4, -1), 30.0);
    for (double r : {1e-3, 0.4, 2.0, 10.0, 29.0}) {
      EXPECT_NEAR(space.W.value(r) / oracle::series_sinh(r), 1.0, 1e-12) << "m=" << m << " r=" << r;
      EXPECT_NEAR(space.W.eta(r), coth(r), 1e-12);
      EXPECT_NEAR(space.W.curvature(r), -1.0, 1e-8);
    }
  }
}

TEST(ConstructW, RandomFixturesAgreeWithIntegratedW) {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int fixture = 0; fixture < 10; ++fixture) {
    const int m = 2 + static_cast<int>(unit(rng) * 4);
    const double R = 5 + 15 * unit(rng);
    WarpingFunction w;
    BoundingFunction h = BoundingFunction::zero();
    switch (fixture % 5) {
    case 0: w = WarpingFunction::space_form(-4 * unit(rng)); h = BoundingFunction::constant(3 * unit(rng) - 1); break;
    case 1: {
      const double a = -1 - 4 * unit(rng);
      w = WarpingFunction::space_form(a);
      h = BoundingFunction::hab(a, a * unit(rng));
      break;
    }
    case 2: w = WarpingFunction::named("exp-r2"); h = BoundingFunction::constant(unit(rng)); break;
    case 3: {
      std::vector<double> r, hv;
      for (int i = 0; i <= 400; ++i) {
        r.push_back(25.0 * i / 400);
        hv.push_back(std::sin(r.back()) * unit(rng));
      }
      w = WarpingFunction::space_form(-unit(rng));
      h = BoundingFunction::tabulated(r, hv);
      break;
    }
    case 4: {
      const double a = -9 * unit(rng) - 0.1;
      w = WarpingFunction::space_form(a);
      h = BoundingFunction::hab(a, 0.0);
      break;
    }
    }
    const auto space = construct_W(m, w, h, R);
    EXPECT_LE(space.cross_check_max_rel, 1e-7) << "fixture " << fixture;
    // Independent re-check of the stored ODE samples against the closed form.
    for (std::size_t i = 0; i < space.ode_radii.size(); i += 7) {
      const double r = space.ode_radii[i];
      const double closed = w.log_value(r) - m / (m - 1.0) * simpson([&](double t) { return h.value(t, m); }, 0, r);
      EXPECT_NEAR(space.ode_log_W[i], closed, 1e-7 * std::max(1.0, std::abs(closed))) << "fixture " << fixture;
    }
  }
}

TEST(ConstructW, Validation) {
  EXPECT_THROW(construct_W(1, WarpingFunction::space_form(0), BoundingFunction::zero(), 1), DomainError);
  EXPECT_THROW(construct_W(2, WarpingFunction::space_form(1), BoundingFunction::zero(), 4), DomainError);
  EXPECT_THROW(construct_W(2, WarpingFunction::space_form(0), BoundingFunction::zero(), -1), DomainError);
  const auto h = BoundingFunction::tabulated({0, 1, 2, 3}, {0, 0, 0, 0});
  EXPECT_THROW(construct_W(2, WarpingFunction::space_form(0), h, 5), DomainError);
}

TEST(Balance, ExampleConstantBoundAboveNotBelow) {
  for (int m : {2, 3}) {
    const auto space = construct_W(m, WarpingFunction::space_form(-1), BoundingFunction::constant(1.5), 50);
    const auto v = check_balance(space, example_grid());
    EXPECT_TRUE(v.balanced_above) << "m=" << m;
    EXPECT_FALSE(v.balanced_below) << "m=" << m;
    ASSERT_TRUE(v.witness_below.has_value());
    EXPECT_LT(v.witness_below->lhs, 1.0 / m - 1e-9);
    EXPECT_TRUE(v.warnings.empty());
  }
}

TEST(Balance, ExampleExpR2BelowNotAbove) {
  const auto space = construct_W(2, WarpingFunction::named("exp-r2"), BoundingFunction::zero(), 50);
  const auto v = check_balance(space, example_grid());
  EXPECT_FALSE(v.balanced_above);
  EXPECT_TRUE(v.balanced_below);
  ASSERT_TRUE(v.witness_above.has_value());
  // r0: where η_w stops decreasing, i.e. w''w = w'² (scaled by e^{-2r²}).
  const double r0 = oracle::bisect(
      [](double r) {
        const double e = std::exp(-r * r);
        const double w = 1 - e + r * e, dw = 2 * r + e, ddw = 4 * r * r + 2;
        return ddw * w - dw * dw;
      },
      0.05, 3.0);
  EXPECT_GE(v.witness_above->r, r0);
  EXPECT_GT(v.witness_above->lhs, 1e-9);
  // The witness is the first offending grid radius, so the previous one is past r0 by at most a step.
  EXPECT_LT(v.witness_above->r, r0 * 1.05);
}

TEST(Balance, ExampleSpaceFormsSelfBalanced) {
  for (double b : {0.0, -1.0, -4.0})
    for (int m : {2, 3, 5}) {
      const auto space = construct_W(m, WarpingFunction::space_form(b), BoundingFunction::zero(), 50);
      const auto v = check_balance(space, example_grid());
      EXPECT_TRUE(v.balanced_above) << "b=" << b << " m=" << m;
      EXPECT_TRUE(v.balanced_below) << "b=" << b << " m=" << m;
      EXPECT_TRUE(v.warnings.empty());
    }
}

TEST(Balance, EuclideanEqualityCase) {
  const auto space = construct_W(3, WarpingFunction::space_form(0), BoundingFunction::zero(), 10);
  for (double r : {0.1, 1.0, 7.0}) EXPECT_NEAR(space.q_W(r) * space.W.eta(r), 1.0 / 3, 1e-12);
  EXPECT_TRUE(check_balanced_below(space, numerics::log_grid(1e-3, 10, 200)).balanced_below);
}

TEST(Balance, LargeConstantFailsBelowFarOut) {
  const auto space = construct_W(2, WarpingFunction::space_form(-1), BoundingFunction::constant(2.0), 50);
  const auto v = check_balanced_below(space, example_grid());
  EXPECT_FALSE(v.balanced_below);
  ASSERT_TRUE(v.witness_below);
  EXPECT_EQ(v.witness_below->rhs, 0.5);
}

TEST(Balance, HabPairIsBalancedWithRespectToWa) {
  const auto space = construct_W(3, WarpingFunction::space_form(-4), BoundingFunction::hab(-4, -1), 40);
  const auto v = check_balance(space, numerics::log_grid(1e-3, 40, 400));
  EXPECT_TRUE(v.balanced_above);
  EXPECT_TRUE(v.balanced_below);
}

TEST(Balance, OverrideIntermediary) {
  // Balance of W = w_{-1} against w_0 instead of the constructing w.
  const auto space = construct_W(2, WarpingFunction::space_form(-1), BoundingFunction::zero(), 20,
                                 WarpingFunction::space_form(0));
  const auto v = check_balanced_below(space, numerics::log_grid(1e-3, 20, 200));
  // q_{w_{-1}}(r)/r < 1/2 for r > 0 since q grows slower than r/2.
  EXPECT_FALSE(v.balanced_below);
}

TEST(Balance, VerdictsAreGridMonotone) {
  std::vector<IsoComparisonSpace> spaces = {
      construct_W(2, WarpingFunction::space_form(-1), BoundingFunction::constant(1.5), 30),
      construct_W(2, WarpingFunction::named("exp-r2"), BoundingFunction::zero(), 30),
      construct_W(3, WarpingFunction::space_form(-1), BoundingFunction::zero(), 30),
      construct_W(2, WarpingFunction::space_form(0), BoundingFunction::constant(-0.2), 30),
      construct_W(2, WarpingFunction::space_form(-1), BoundingFunction::constant(0.9), 30)};
  for (const auto& s : spaces) {
    std::vector<double> grid = numerics::log_grid(1e-3, 30, 100);
    auto prev = check_balance(s, grid);
    for (int level = 0; level < 3; ++level) {
      std::vector<double> finer;
      for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        finer.push_back(grid[i]);
        finer.push_back(std::sqrt(grid[i] * grid[i + 1]));
      }
      finer.push_back(grid.back());
      grid = finer;
      const auto next = check_balance(s, grid);
      EXPECT_TRUE(prev.balanced_above || !next.balanced_above);
      EXPECT_TRUE(prev.balanced_below || !next.balanced_below);
      // A witness can only move to an earlier radius.
      if (prev.witness_above) {
        EXPECT_LE(next.witness_above->r, prev.witness_above->r);
      }
      if (prev.witness_below) {
        EXPECT_LE(next.witness_below->r, prev.witness_below->r);
      }
      prev = next;
    }
  }
}

TEST(CheegerValues, SpaceFormSandwich) {
  for (auto [m, b] : {std::pair{2, -1.0}, std::pair{3, -1.0}, std::pair{2, -4.0}, std::pair{3, -4.0}}) {
    const auto space = construct_W(m, WarpingFunction::space_form(b), BoundingFunction::zero(), 40);
    const auto up = cheeger_upper_value(space, 40);
    const auto lo = cheeger_lower_value(space, 40);
    const double expected = (m - 1) * std::sqrt(-b);
    ASSERT_TRUE(up.value) << "m=" << m << " b=" << b;
    ASSERT_TRUE(lo.value);
    EXPECT_NEAR(*up.value, expected, 1e-6);
    EXPECT_NEAR(*lo.value, expected, 1e-6);
    EXPECT_TRUE(up.hypothesis_holds);
    EXPECT_TRUE(lo.hypothesis_holds);
    EXPECT_TRUE(up.warnings.empty());
  }
}

TEST(CheegerValues, EuclideanLimitsVanish) {
  const auto s2 = construct_W(2, WarpingFunction::space_form(0), BoundingFunction::zero(), 40);
  const auto up = cheeger_upper_value(s2, 40);
  ASSERT_TRUE(up.value);
  EXPECT_NEAR(*up.value, 0.0, 1e-9);
  const auto s5 = construct_W(5, WarpingFunction::space_form(0), BoundingFunction::zero(), 40);
  const auto lo = cheeger_lower_value(s5, 40);
  ASSERT_TRUE(lo.value);
  EXPECT_NEAR(*lo.value, 0.0, 1e-9);
}

TEST(CheegerValues, NegativeLowerBoundIsReportedNotClamped) {
  const auto space = construct_W(2, WarpingFunction::space_form(-1), BoundingFunction::constant(1.0), 40);
  const auto lo = cheeger_lower_value(space, 40);
  ASSERT_TRUE(lo.value);
  // coth r - 2 -> -1.
  EXPECT_NEAR(*lo.value, -1.0, 1e-6);
  ASSERT_FALSE(lo.warnings.empty());
  EXPECT_NE(lo.warnings.back().find("vacuous"), std::string::npos);
}

TEST(CheegerValues, DivergentTailHasNoValue) {
  const auto space = construct_W(2, WarpingFunction::named("exp-r2"), BoundingFunction::zero(), 50);
  const auto up = cheeger_upper_value(space, 50);
  EXPECT_FALSE(up.value);
  EXPECT_FALSE(up.estimate.converged);
  const auto lo = cheeger_lower_value(space, 50);
  EXPECT_FALSE(lo.value);
  EXPECT_FALSE(lo.hypothesis_holds);
}

TEST(CheegerValues, RejectsPositiveCurvatureAndRange) {
  const auto sphere = construct_W(2, WarpingFunction::space_form(1), BoundingFunction::zero(), 3);
  EXPECT_THROW(cheeger_upper_value(sphere, 3), DomainError);
  const auto flat = construct_W(2, WarpingFunction::space_form(0), BoundingFunction::zero(), 10);
  EXPECT_THROW(cheeger_lower_value(flat, 20), DomainError);
}

TEST(Constellation, ParsesAllAmbientsAndBounds) {
  const auto dir = std::filesystem::temp_directory_path() / "cheegerlab_constellation";
  std::filesystem::create_directories(dir);
  {
    std::ofstream h(dir / "h.csv");
    h << "r,h\n";
    for (int i = 0; i <= 20; ++i) h << i << ",0.1\n";
  }
  auto spec = parse_constellation(Json::parse(R"({"m":3,"ambient":{"b":-1},"h":{"kind":"constant","C":1.5},"R":40})"));
  EXPECT_EQ(spec.m, 3);
  EXPECT_EQ(*spec.ambient_b, -1.0);
  EXPECT_EQ(spec.h.kind(), BoundingFunction::Kind::Constant);
  spec = parse_constellation(Json::parse(R"({"m":2,"ambient":{"w":"exp-r2"},"h":{"kind":"zero"},"R":50})"));
  EXPECT_FALSE(spec.ambient_b);
  spec = parse_constellation(Json::parse(R"({"m":2,"ambient":{"b":-4},"h":{"kind":"hab","a":-4,"b":-1},"R":40,
                                              "balance_wrt":{"b":-4}})"));
  EXPECT_EQ(spec.h.kind(), BoundingFunction::Kind::HabPair);
  EXPECT_TRUE(spec.balance_wrt);
  spec = parse_constellation(Json::parse(R"({"m":2,"ambient":{"b":0},"h":{"kind":"csv","path":"h.csv"},"R":10})"), dir);
  EXPECT_EQ(spec.h.kind(), BoundingFunction::Kind::Tabulated);

  for (const char* bad : {R"({"ambient":{"b":-1},"R":1})", R"({"m":2.5,"ambient":{"b":-1},"R":1})",
                          R"({"m":2,"ambient":{"b":-1,"w":"exp-r2"},"R":1})", R"({"m":2,"ambient":{"b":-1}})",
                          R"({"m":2,"ambient":{"b":-1},"h":{"kind":"cubic"},"R":1})",
                          R"({"m":2,"ambient":{"w":"nope"},"R":1})", R"([1,2])"})
    EXPECT_THROW(parse_constellation(Json::parse(bad)), ParseError) << bad;
}

TEST(Constellation, ReportMirrorsVerdicts) {
  const auto spec = parse_constellation(Json::parse(R"({"m":2,"ambient":{"b":-1},"h":{"kind":"zero"},"R":40})"));
  const auto report = constellation_report(build_space(spec));
  EXPECT_TRUE(report["balance"]["balanced_above"].get<bool>());
  EXPECT_TRUE(report["balance"]["balanced_below"].get<bool>());
  EXPECT_NEAR(report["cheeger_upper"]["value"].get<double>(), 1.0, 1e-6);
  EXPECT_NEAR(report["cheeger_lower"]["value"].get<double>(), 1.0, 1e-6);
  EXPECT_TRUE(report["balance"]["witness_above"].is_null());
}
