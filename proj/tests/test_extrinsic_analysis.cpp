#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>
#include <vector>

#include "cheegerlab/extrinsic_analysis.hpp"
#include "cheegerlab/mesh_generators.hpp"
#include "cheegerlab/mesh_io.hpp"
#include "cheegerlab/numerics/grid.hpp"
#include "oracles.hpp"

using namespace cheegerlab;

namespace {

constexpr double kPi = std::numbers::pi;

IsoComparisonSpace space_form(int m, double b, double R = 40.0) {
  return construct_W(m, WarpingFunction::space_form(b), BoundingFunction::zero(), R);
}

SampledSubmanifold make(SurfaceKind kind, double t_max, MeshResolution res) {
  SurfaceParams p;
  p.kind = kind;
  p.t_max = t_max;
  p.resolution = res;
  return generate_surface(p);
}

SampledSubmanifold make(SurfaceKind kind, double t_max) { return make(kind, t_max, default_resolution(kind)); }

// Catenoid a = 1 about its centre: |X|² = 1 + σ² + asinh(σ)² in meridian arclength σ.
double catenoid_disc_area(double t) {
  const double S = oracle::bisect([t](double s) { return 1 + s * s + std::pow(std::asinh(s), 2) - t * t; }, 0.0, t);
  const int n = 20000;
  const double h = S / n;
  auto g = [](double s) { return 2 * kPi * std::sqrt(1 + s * s); };
  double sum = g(0) + g(S);
  for (int i = 1; i < n; ++i) sum += g(i * h) * (i % 2 ? 4 : 2);
  return 2 * sum * h / 3;
}

class ScopedThreads {
public:
  explicit ScopedThreads(const char* n) {
    if (const char* old = std::getenv("CHEEGERLAB_THREADS")) saved_ = old;
    setenv("CHEEGERLAB_THREADS", n, 1);
  }
  ~ScopedThreads() {
    if (saved_.empty())
      unsetenv("CHEEGERLAB_THREADS");
    else
      setenv("CHEEGERLAB_THREADS", saved_.c_str(), 1);
  }

private:
  std::string saved_;
};

} // namespace

TEST(GrowthProfile, PlaneIsTheEqualityCase) {
  const auto P = make(SurfaceKind::Plane, 10.0);
  const auto space = space_form(2, 0.0);
  const auto G = compute_profile(P, space, numerics::linear_grid(0.5, 10.0, 40));
  for (std::size_t i = 0; i < G.t.size(); ++i) {
    EXPECT_NEAR(G.f[i], 1.0, 1e-3) << "t=" << G.t[i];
    EXPECT_NEAR(G.F[i], 0.0, 1e-3 * 2 / G.t[i]) << "t=" << G.t[i];
    EXPECT_LT(std::abs(G.margin[i]), 1e-3 * 2 / G.t[i]) << "t=" << G.t[i];
  }
  EXPECT_TRUE(verify_isoperimetric_inequality(G).pass);
  EXPECT_TRUE(profile_violations(G).pass);
}

TEST(GrowthProfile, PlaneCoareaMatchesDifferencedVolume) {
  const auto P = make(SurfaceKind::Plane, 6.0);
  const auto G = compute_profile(P, space_form(2, 0.0), numerics::linear_grid(1.0, 5.0, 9));
  for (std::size_t i = 0; i < G.t.size(); ++i) {
    EXPECT_NEAR(G.vol_D_prime_coarea[i], 2 * kPi * G.t[i], 1e-3 * 2 * kPi * G.t[i]);
    EXPECT_NEAR(G.vol_D_prime[i], G.vol_D_prime_coarea[i], 1e-3 * G.vol_D_prime_coarea[i]);
    // Chords of the rings tilt the PL gradient slightly above 1.
    EXPECT_NEAR(G.mean_grad[i], 1.0, 1e-4);
  }
}

TEST(GrowthProfile, HyperbolicDiscAreaOnRefinedMesh) {
  const auto P = make(SurfaceKind::HyperbolicPlane, 6.0, default_resolution(SurfaceKind::HyperbolicPlane).refined(2));
  const auto G = compute_profile(P, space_form(2, -1.0), numerics::linear_grid(0.5, 6.0, 12));
  for (std::size_t i = 0; i < G.t.size(); ++i) {
    const double disc = 2 * kPi * (oracle::series_cosh(G.t[i]) - 1);
    EXPECT_NEAR(G.vol_D[i], disc, 1e-3 * disc) << "t=" << G.t[i];
  }
}

TEST(GrowthProfile, CatenoidAreaMatchesQuadrature) {
  const auto P = make(SurfaceKind::Catenoid, 20.0);
  const auto G = compute_profile(P, space_form(2, 0.0), numerics::linear_grid(2.0, 20.0, 10));
  for (std::size_t i = 0; i < G.t.size(); ++i) {
    const double ref = catenoid_disc_area(G.t[i]);
    EXPECT_NEAR(G.vol_D[i], ref, 2e-3 * ref) << "t=" << G.t[i];
  }
  // Two planar ends: the density ratio tends to 2.
  EXPECT_NEAR(G.f.back(), 2.0, 0.1);
}

TEST(GrowthProfile, VolumeIsMonotoneAndSaturates) {
  const auto P = make(SurfaceKind::Helicoid, 3.0);
  const LevelSetEngine engine(P);
  double prev = 0.0;
  for (double t : numerics::linear_grid(0.05, 3.0, 60)) {
    const double v = engine.volume(t);
    ASSERT_GE(v, prev) << "t=" << t;
    prev = v;
  }
  EXPECT_NEAR(engine.volume(3.5), P.total_area(), 1e-12 * P.total_area());
}

TEST(GrowthProfile, ThreadCountDoesNotChangeResults) {
  const auto P = make(SurfaceKind::HyperbolicPlane, 4.0);
  const auto space = space_form(2, -1.0);
  const auto grid = numerics::linear_grid(0.5, 4.0, 15);
  GrowthProfile one, four;
  {
    ScopedThreads s("1");
    one = compute_profile(P, space, grid);
  }
  {
    ScopedThreads s("4");
    four = compute_profile(P, space, grid);
  }
  EXPECT_EQ(one.vol_D, four.vol_D);
  EXPECT_EQ(one.vol_bdry, four.vol_bdry);
  EXPECT_EQ(one.vol_D_prime, four.vol_D_prime);
}

TEST(GrowthProfile, InputErrors) {
  const auto P = make(SurfaceKind::Plane, 3.0);
  const auto flat = space_form(2, 0.0);
  EXPECT_THROW(compute_profile(P, space_form(3, 0.0), numerics::linear_grid(0.5, 3.0, 5)), InputMismatch);
  EXPECT_THROW(compute_profile(P, flat, numerics::linear_grid(0.5, 3.5, 5)), InputMismatch);
  EXPECT_THROW(compute_profile(P, flat, std::vector<double>{1.0, 0.5}), DomainError);
  EXPECT_THROW(compute_profile(P, flat, std::vector<double>{}), DomainError);
  // The truncation radius itself is a valid grid point.
  EXPECT_NO_THROW(compute_profile(P, flat, std::vector<double>{1.0, P.truncation_radius}));
  // The catenoid keeps away from its centre, so small balls see nothing.
  const auto C = make(SurfaceKind::Catenoid, 4.0);
  EXPECT_THROW(compute_profile(C, flat, std::vector<double>{0.5, 2.0}), InputMismatch);
}

TEST(Cheeger, PlaneEstimateIsTwoOverT) {
  const auto P = make(SurfaceKind::Plane, 8.0);
  const auto space = space_form(2, 0.0);
  const auto C = cheeger_estimate(P, space, numerics::linear_grid(1.0, 8.0, 15));
  EXPECT_NEAR(C.upper_estimate, 2.0 / 8.0, 1e-3 * 0.25);
  EXPECT_DOUBLE_EQ(C.t_at_min, 8.0);
  ASSERT_TRUE(C.model_lower.value.has_value());
  EXPECT_NEAR(*C.model_lower.value, 0.0, 1e-6);
  EXPECT_TRUE(C.sandwich_verdict);
  EXPECT_FALSE(C.diagnostics.empty());
}

TEST(Laplacian, PlaneMatchesOneOverR) {
  const auto P = make(SurfaceKind::Plane, 6.0);
  const auto R = discrete_laplacian_check(P, space_form(2, 0.0));
  EXPECT_TRUE(R.pass);
  EXPECT_EQ(R.violations, 0u);
  EXPECT_LT(R.residual_max, 0.05);
  EXPECT_GT(R.eligible, 1000u);
}

TEST(Laplacian, HyperbolicPlaneUniformSectors) {
  const auto P = make(SurfaceKind::HyperbolicPlane, 3.0, MeshResolution{0.05, 100.0, 1024});
  const auto R = discrete_laplacian_check(P, space_form(2, -1.0));
  EXPECT_TRUE(R.pass);
  EXPECT_LT(R.residual_max, 0.05);
}

TEST(Laplacian, CotangentWeightsReproduceLinearFunctions) {
  const auto P = make(SurfaceKind::Plane, 3.0);
  std::vector<double> fn(P.vertices.size());
  for (std::size_t i = 0; i < fn.size(); ++i) fn[i] = 2 * P.vertices[i][0] - P.vertices[i][1] + 0.5;
  const auto L = cotangent_laplacian(P, fn);
  for (std::size_t i = 0; i < fn.size(); ++i) {
    if (!L.interior[i]) continue;
    ASSERT_NEAR(L.value[i], 0.0, 1e-8);
  }
}

TEST(Laplacian, NoEligibleVertexIsAMeshError) {
  std::istringstream in("OFF\n3 1 0\n1 0 0\n2 0 0\n1 1 0\n3 0 1 2\n");
  const auto P = read_off(in);
  EXPECT_THROW(discrete_laplacian_check(P, space_form(2, 0.0)), MeshError);
}

TEST(Divergence, PlaneDiscFluxIsCircumference) {
  const auto P = make(SurfaceKind::Plane, 8.0);
  const auto D = divergence_audit(P, 5.0);
  EXPECT_NEAR(D.rhs, 2 * kPi * 5, 1e-3 * 2 * kPi * 5);
  EXPECT_NEAR(D.lhs, 2 * kPi * 5, 1e-3 * 2 * kPi * 5);
  EXPECT_TRUE(D.pass);
}

TEST(Divergence, RadiusGuards) {
  const auto P = make(SurfaceKind::Plane, 3.0);
  EXPECT_THROW(divergence_audit(P, 1e-6), DomainError);
  EXPECT_THROW(divergence_audit(P, -1.0), DomainError);
  EXPECT_THROW(divergence_audit(P, 3.0), InputMismatch);
}
