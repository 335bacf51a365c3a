// Prints the exhaustion quotient Vol(∂D_t)/Vol(D_t) of three test surfaces
// next to the comparison model value, on a coarse t grid.

#include <cstdio>

#include "cheegerlab/cheegerlab.hpp"
#include "cheegerlab/numerics/grid.hpp"

using namespace cheegerlab;

int main() {
  struct Run {
    SurfaceKind kind;
    double b;
    double t_min, t_max;
  };
  const Run runs[] = {{SurfaceKind::Plane, 0.0, 1.0, 8.0},
                      {SurfaceKind::Catenoid, 0.0, 2.0, 30.0},
                      {SurfaceKind::HyperbolicPlane, -1.0, 1.0, 8.0}};
  for (const auto& run : runs) {
    SurfaceParams p;
    p.kind = run.kind;
    p.t_max = run.t_max;
    p.resolution = default_resolution(run.kind).refined(run.kind == SurfaceKind::HyperbolicPlane ? 1 : 0);
    const auto P = generate_surface(p);
    const auto space = construct_W(2, WarpingFunction::space_form(run.b), BoundingFunction::zero(), 40.0);
    const auto G = compute_profile(P, space, numerics::linear_grid(run.t_min, run.t_max, 8));
    std::printf("%s  (%zu faces, h_max %.3f)\n", to_string(run.kind).c_str(), P.faces.size(), P.max_edge);
    std::printf("  %8s %14s %14s %10s\n", "t", "|dD|/|D|", "model", "f");
    for (std::size_t i = 0; i < G.t.size(); ++i)
      std::printf("  %8.3f %14.6f %14.6f %10.6f\n", G.t[i], G.vol_bdry[i] / G.vol_D[i], G.ref_sphere_ball[i], G.f[i]);
    const auto C = cheeger_estimate(G, space);
    std::printf("  exhaustion estimate %.5f, model lower bound %.5f\n\n", C.upper_estimate,
                C.model_lower.value.value_or(0.0) + 0.0);
  }
}
