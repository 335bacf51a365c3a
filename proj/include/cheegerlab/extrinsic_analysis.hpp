#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cheegerlab/ambient_geometry.hpp"
#include "cheegerlab/error.hpp"
#include "cheegerlab/iso_comparison.hpp"
#include "cheegerlab/numerics/summation.hpp"
#include "cheegerlab/parallel.hpp"

namespace cheegerlab {

/// Sublevel-set quantities of the piecewise-linear r at one radius.
struct LevelSample {
  double volume = 0.0;
  double length = 0.0;
  /// Σ L_f / |∇r_f|: the co-area derivative of the PL volume.
  double coarea = 0.0;
  /// Σ L_f |∇r_f|: outward flux of the PL gradient.
  double flux = 0.0;
  std::size_t crossing = 0;
};

namespace detail {

inline double face_edge(const std::array<double, 3>& l, int i, int j) { return (i + 1) % 3 == j ? l[i] : l[j]; }

// Part of one face below level t. r is linear in intrinsic arclength along
// each edge; the cut is the geodesic between the two edge crossings, so the
// piece next to a corner is an exact SAS triangle.
struct FaceCut {
  double area = 0.0;
  double segment = 0.0;
  // Corner the SAS piece hangs from, its edge fractions and whether the
  // piece is the inside (one corner below t) or the outside (two below).
  int corner = -1;
  double lambda_a = 0.0, lambda_b = 0.0;
  bool inside_piece = true;
  double piece_area = 0.0;
};

inline FaceCut cut_face(const IntrinsicKernel& K, const std::array<double, 3>& rv, const std::array<double, 3>& l,
                        const std::array<std::array<double, 2>, 3>& half, double face_area, double t) {
  FaceCut c;
  int below = 0;
  for (double x : rv) below += x <= t;
  if (below == 3) {
    c.area = face_area;
    return c;
  }
  if (below == 0) return c;
  // Lone corner: the one on its own side of t.
  int k = 0;
  for (int i = 0; i < 3; ++i)
    if ((rv[i] <= t) == (below == 1)) k = i;
  const int i = (k + 1) % 3, j = (k + 2) % 3;
  const double la = (t - rv[k]) / (rv[i] - rv[k]);
  const double lb = (t - rv[k]) / (rv[j] - rv[k]);
  const double a = face_edge(l, k, i) * la;
  const double b = face_edge(l, k, j) * lb;
  const double piece = K.sas_area(a, b, half[k][0], half[k][1]);
  c.segment = K.sas_side(a, b, half[k][0]);
  c.corner = k;
  c.lambda_a = la;
  c.lambda_b = lb;
  c.inside_piece = below == 1;
  c.piece_area = piece;
  c.area = below == 1 ? piece : std::max(0.0, face_area - piece);
  return c;
}

} // namespace detail

/// Sorted face indices for fast sublevel queries at many radii.
class LevelSetEngine {
public:
  explicit LevelSetEngine(const SampledSubmanifold& P) : P_(&P), kernel_(P.ambient.kernel()) {
    const std::size_t nf = P.faces.size();
    std::vector<double> rmin(nf), rmax(nf);
    for (std::size_t f = 0; f < nf; ++f) {
      rmin[f] = P.r_min(f);
      rmax[f] = P.r_max(f);
      span_ = std::max(span_, rmax[f] - rmin[f]);
    }
    by_max_.resize(nf);
    std::iota(by_max_.begin(), by_max_.end(), 0u);
    std::sort(by_max_.begin(), by_max_.end(),
              [&](auto x, auto y) { return rmax[x] < rmax[y] || (rmax[x] == rmax[y] && x < y); });
    by_min_ = by_max_;
    std::sort(by_min_.begin(), by_min_.end(),
              [&](auto x, auto y) { return rmin[x] < rmin[y] || (rmin[x] == rmin[y] && x < y); });
    sorted_max_.resize(nf);
    sorted_min_.resize(nf);
    std::vector<double> areas(nf);
    for (std::size_t q = 0; q < nf; ++q) {
      sorted_max_[q] = rmax[by_max_[q]];
      sorted_min_[q] = rmin[by_min_[q]];
      areas[q] = P.face_area[by_max_[q]];
    }
    prefix_area_ = numerics::compensated_prefix_sums(areas);
  }

  const SampledSubmanifold& mesh() const { return *P_; }

  /// Area of faces entirely inside D_t.
  double full_area(double t) const {
    const auto n = std::upper_bound(sorted_max_.begin(), sorted_max_.end(), t) - sorted_max_.begin();
    return n == 0 ? 0.0 : prefix_area_[n - 1];
  }

  /// Calls fn(face) for each face with r_min <= t < r_max, in a fixed order.
  template <class Fn>
  void for_each_crossing(double t, Fn&& fn) const {
    auto lo = std::lower_bound(sorted_min_.begin(), sorted_min_.end(), t - span_) - sorted_min_.begin();
    auto hi = std::upper_bound(sorted_min_.begin(), sorted_min_.end(), t) - sorted_min_.begin();
    for (auto q = lo; q < hi; ++q) {
      const auto f = by_min_[q];
      if (P_->r_max(f) > t) fn(f);
    }
  }

  detail::FaceCut cut(std::uint32_t f, double t) const {
    const auto& F = P_->faces[f];
    return detail::cut_face(kernel_, {P_->r[F[0]], P_->r[F[1]], P_->r[F[2]]}, P_->edge_length[f],
                            P_->half_angle[f], P_->face_area[f], t);
  }

  double volume(double t) const {
    numerics::CompensatedSum partial;
    for_each_crossing(t, [&](std::uint32_t f) { partial.add(cut(f, t).area); });
    return full_area(t) + partial.value();
  }

  LevelSample sample(double t) const {
    LevelSample s;
    numerics::CompensatedSum vol, len, co, flux;
    for_each_crossing(t, [&](std::uint32_t f) {
      const auto c = cut(f, t);
      vol.add(c.area);
      len.add(c.segment);
      const double g = P_->grad_r_pl[f];
      if (g > 0.0) co.add(c.segment / g);
      flux.add(c.segment * g);
      ++s.crossing;
    });
    // Once t reaches the truncation radius the mesh boundary bounds D_t.
    if (t >= P_->truncation_radius) {
      for (const auto& e : P_->boundary_edges) {
        if (P_->r[e[0]] > t || P_->r[e[1]] > t) continue;
        const auto& F = P_->faces[e[2]];
        int i = 0;
        while (F[i] != e[0]) ++i;
        const int j = F[(i + 1) % 3] == e[1] ? (i + 1) % 3 : (i + 2) % 3;
        const double L = detail::face_edge(P_->edge_length[e[2]], i, j);
        const double g = P_->grad_r_pl[e[2]];
        len.add(L);
        if (g > 0.0) co.add(L / g);
        flux.add(L * g);
      }
    }
    s.volume = full_area(t) + vol.value();
    s.length = len.value();
    s.coarea = co.value();
    s.flux = flux.value();
    return s;
  }

private:
  const SampledSubmanifold* P_;
  IntrinsicKernel kernel_;
  double span_ = 0.0;
  std::vector<std::uint32_t> by_max_, by_min_;
  std::vector<double> sorted_max_, sorted_min_, prefix_area_;
};

struct GrowthProfile {
  std::vector<double> t;
  std::vector<double> vol_D;
  std::vector<double> vol_bdry;
  /// Central difference of Vol(D_t).
  std::vector<double> vol_D_prime;
  /// Σ L_f/|∇r_f| over the level set, the co-area value of the same derivative.
  std::vector<double> vol_D_prime_coarea;
  /// Length-weighted mean of |∇r| on the level set.
  std::vector<double> mean_grad;
  std::vector<double> ball_W;
  std::vector<double> f;
  std::vector<double> F;
  std::vector<double> ref_sphere_ball;
  std::vector<double> margin;
  std::vector<std::size_t> crossing_faces;
  double truncation_radius = 0.0;
  double h_max = 0.0;
  double epsilon_mesh = 0.0;
  /// Half-width of the difference stencil.
  double derivative_step = 0.0;
};

namespace detail {

inline double snap_tolerance(double truncation) { return 1e-9 * std::max(1.0, std::abs(truncation)); }

inline void require_grid(const SampledSubmanifold& P, std::span<const double> t_grid) {
  if (t_grid.empty()) throw DomainError("empty t grid");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > 0.0) || !std::isfinite(t_grid[i])) throw DomainError("t grid values must be positive");
    if (i && !(t_grid[i] > t_grid[i - 1])) throw DomainError("t grid must be strictly increasing");
  }
  if (t_grid.back() > P.truncation_radius + snap_tolerance(P.truncation_radius))
    throw InputMismatch("t = " + format_double(t_grid.back()) + " is beyond the mesh truncation radius " +
                        format_double(P.truncation_radius));
}

} // namespace detail

/// Growth profile of D_t over t_grid against the comparison space.
inline GrowthProfile compute_profile(const SampledSubmanifold& P, const IsoComparisonSpace& space,
                                     std::span<const double> t_grid) {
  if (space.m != P.m)
    throw InputMismatch("comparison space has m = " + std::to_string(space.m) + " but the mesh has m = " +
                        std::to_string(P.m));
  detail::require_grid(P, t_grid);
  const LevelSetEngine engine(P);
  const double trunc = P.truncation_radius;
  const double snap = detail::snap_tolerance(trunc);

  double gap = t_grid.front();
  for (std::size_t i = 1; i < t_grid.size(); ++i) gap = std::min(gap, t_grid[i] - t_grid[i - 1]);
  const double delta = gap / 16.0;

  GrowthProfile G;
  const std::size_t n = t_grid.size();
  G.t.assign(t_grid.begin(), t_grid.end());
  for (auto* v : {&G.vol_D, &G.vol_bdry, &G.vol_D_prime, &G.vol_D_prime_coarea, &G.mean_grad, &G.ball_W, &G.f,
                  &G.F, &G.ref_sphere_ball, &G.margin})
    v->assign(n, 0.0);
  G.crossing_faces.assign(n, 0);
  G.truncation_radius = trunc;
  G.h_max = P.max_edge;
  G.epsilon_mesh = 10.0 * P.max_edge / t_grid.front();
  G.derivative_step = delta;

  const ModelSpace model = space.model();
  // Radii within the snap tolerance of the truncation radius count as the whole mesh.
  auto eval_radius = [&](double t) { return t >= trunc - snap ? t + snap : t; };

  parallel_for(n, [&](std::size_t i) {
    const double t = t_grid[i];
    const auto s = engine.sample(eval_radius(t));
    G.vol_D[i] = s.volume;
    G.vol_bdry[i] = s.length;
    G.vol_D_prime_coarea[i] = s.coarea;
    G.mean_grad[i] = s.length > 0.0 ? s.flux / s.length : 0.0;
    G.crossing_faces[i] = s.crossing;
    if (t + delta <= trunc - snap) {
      G.vol_D_prime[i] = (engine.volume(t + delta) - engine.volume(t - delta)) / (2 * delta);
    } else {
      const double v1 = engine.volume(t - delta), v2 = engine.volume(t - 2 * delta);
      G.vol_D_prime[i] = (3 * s.volume - 4 * v1 + v2) / (2 * delta);
    }
    G.ball_W[i] = model.ball_volume(t);
    G.ref_sphere_ball[i] = model.sphere_ball_ratio(t);
  });

  for (std::size_t i = 0; i < n; ++i) {
    if (!(G.vol_D[i] > 0.0))
      throw InputMismatch("D_t is empty at t = " + format_double(G.t[i]) + " (below the first mesh face)");
    G.f[i] = G.vol_D[i] / G.ball_W[i];
    G.F[i] = G.vol_D_prime[i] / G.vol_D[i] - G.ref_sphere_ball[i];
    G.margin[i] = G.vol_bdry[i] / G.vol_D[i] - G.ref_sphere_ball[i];
  }
  return G;
}

struct IsoperimetricReport {
  double min_margin = 0.0;
  double t_at_min = 0.0;
  /// min over t of margin / ref_sphere_ball.
  double min_relative_margin = 0.0;
  double t_at_min_relative = 0.0;
  double max_abs_relative_margin = 0.0;
  double epsilon_mesh = 0.0;
  bool pass = false;
};

inline IsoperimetricReport verify_isoperimetric_inequality(const GrowthProfile& G) {
  IsoperimetricReport R;
  R.epsilon_mesh = G.epsilon_mesh;
  R.min_margin = std::numeric_limits<double>::infinity();
  R.min_relative_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < G.t.size(); ++i) {
    const double rel = G.margin[i] / G.ref_sphere_ball[i];
    if (G.margin[i] < R.min_margin) {
      R.min_margin = G.margin[i];
      R.t_at_min = G.t[i];
    }
    if (rel < R.min_relative_margin) {
      R.min_relative_margin = rel;
      R.t_at_min_relative = G.t[i];
    }
    R.max_abs_relative_margin = std::max(R.max_abs_relative_margin, std::abs(rel));
  }
  R.pass = R.min_margin >= -R.epsilon_mesh;
  return R;
}

/// Worst violations of f non-decreasing and F >= 0 over the grid.
struct ProfileViolations {
  double monotonicity = 0.0;
  double t_monotonicity = 0.0;
  double nonnegativity = 0.0;
  double t_nonnegativity = 0.0;
  double epsilon_mesh = 0.0;
  bool pass = false;
};

inline ProfileViolations profile_violations(const GrowthProfile& G) {
  ProfileViolations V;
  V.epsilon_mesh = G.epsilon_mesh;
  for (std::size_t i = 0; i + 1 < G.t.size(); ++i) {
    const double drop = G.f[i] - G.f[i + 1];
    if (drop > V.monotonicity) {
      V.monotonicity = drop;
      V.t_monotonicity = G.t[i + 1];
    }
  }
  for (std::size_t i = 0; i < G.t.size(); ++i)
    if (-G.F[i] > V.nonnegativity) {
      V.nonnegativity = -G.F[i];
      V.t_nonnegativity = G.t[i];
    }
  V.pass = V.monotonicity <= V.epsilon_mesh && V.nonnegativity <= V.epsilon_mesh;
  return V;
}

struct CheegerReport {
  /// min over the grid of Vol(∂D_t)/Vol(D_t).
  double upper_estimate = 0.0;
  double t_at_min = 0.0;
  CheegerBound model_upper;
  CheegerBound model_lower;
  double tolerance = 0.0;
  bool sandwich_verdict = false;
  /// upper_estimate <= model upper value + tolerance (when that value exists).
  std::optional<bool> below_model_upper;
  std::vector<std::string> diagnostics;
};

/// Exhaustion estimate from a computed profile, compared with the model
/// values evaluated up to space.R.
inline CheegerReport cheeger_estimate(const GrowthProfile& G, const IsoComparisonSpace& space,
                                      double tolerance = 0.02) {
  CheegerReport C;
  C.tolerance = tolerance;
  C.upper_estimate = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < G.t.size(); ++i) {
    const double q = G.vol_bdry[i] / G.vol_D[i];
    if (q < C.upper_estimate) {
      C.upper_estimate = q;
      C.t_at_min = G.t[i];
    }
  }
  if (G.t.size() > 1 && C.t_at_min == G.t.back())
    C.diagnostics.push_back("minimum at the largest grid radius; the estimate is still decreasing");
  const bool curved_positive = space.W.space_form_curvature().value_or(-1.0) > 0.0;
  if (curved_positive) {
    C.diagnostics.push_back("model Cheeger values are not defined for positive curvature");
  } else {
    C.model_upper = cheeger_upper_value(space, space.R);
    C.model_lower = cheeger_lower_value(space, space.R);
  }
  if (C.model_lower.value) {
    C.sandwich_verdict = *C.model_lower.value - tolerance <= C.upper_estimate;
  } else {
    C.diagnostics.push_back("no model lower value; sandwich cannot be confirmed");
  }
  if (C.model_upper.value) C.below_model_upper = C.upper_estimate <= *C.model_upper.value + tolerance;
  return C;
}

inline CheegerReport cheeger_estimate(const SampledSubmanifold& P, const IsoComparisonSpace& space,
                                      std::span<const double> t_grid, double tolerance = 0.02) {
  return cheeger_estimate(compute_profile(P, space, t_grid), space, tolerance);
}

/// Cotangent Laplacian with barycentric cells, from intrinsic edge lengths.
struct VertexLaplacian {
  std::vector<double> value;
  std::vector<double> cell_area;
  /// 1 when no face around the vertex touches the mesh boundary.
  std::vector<std::uint8_t> interior;
};

inline VertexLaplacian cotangent_laplacian(const SampledSubmanifold& P, std::span<const double> fn) {
  const std::size_t nv = P.vertices.size();
  if (fn.size() != nv) throw DomainError("vertex function size does not match the mesh");
  VertexLaplacian L;
  L.value.assign(nv, 0.0);
  L.cell_area.assign(nv, 0.0);
  L.interior.assign(nv, 1);
  const IntrinsicKernel flat(0.0);
  std::vector<double> sum(nv, 0.0);
  for (std::size_t f = 0; f < P.faces.size(); ++f) {
    const auto& F = P.faces[f];
    const auto& l = P.edge_length[f];
    const double third = flat.area(l) / 3.0;
    bool touches = false;
    for (int i = 0; i < 3; ++i) {
      L.cell_area[F[i]] += third;
      touches = touches || P.boundary_vertex[F[i]];
      const auto h = flat.half_angle(l, i);
      const double cot = (h[1] - h[0]) * (h[1] + h[0]) / (2 * h[0] * h[1]);
      // Corner i faces the edge between the other two corners.
      const auto a = F[(i + 1) % 3], b = F[(i + 2) % 3];
      const double w = 0.5 * cot * (fn[b] - fn[a]);
      sum[a] += w;
      sum[b] -= w;
    }
    if (touches)
      for (auto v : F) L.interior[v] = 0;
  }
  for (std::size_t v = 0; v < nv; ++v) {
    if (L.cell_area[v] > 0.0)
      L.value[v] = sum[v] / L.cell_area[v];
    else
      L.interior[v] = 0;
  }
  return L;
}

struct LaplacianReport {
  std::size_t interior_vertices = 0;
  /// Interior vertices with r > 2·h_max.
  std::size_t eligible = 0;
  std::size_t violations = 0;
  double violation_fraction = 0.0;
  /// Interior vertices with r <= 2·h_max and their violations.
  std::size_t near_pole = 0;
  std::size_t near_pole_violations = 0;
  bool concentrated_near_pole = true;
  double slack_relative = 0.0;
  /// Quantiles of |Δr - bound| / |bound| over eligible vertices.
  double residual_median = 0.0;
  double residual_p95 = 0.0;
  double residual_max = 0.0;
  double worst_r = 0.0;
  double worst_laplacian = 0.0;
  double worst_bound = 0.0;
  bool pass = false;
};

/// Fraction of interior vertices breaking Δr >= (m-1) η_W(r) - δ with
/// δ = slack_relative·|(m-1) η_W(r)|.
inline LaplacianReport discrete_laplacian_check(const SampledSubmanifold& P, const IsoComparisonSpace& space,
                                                double slack_relative = 0.05) {
  const auto L = cotangent_laplacian(P, P.r);
  LaplacianReport R;
  R.slack_relative = slack_relative;
  const double cut = 2.0 * P.max_edge;
  std::vector<double> residuals;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < P.vertices.size(); ++v) {
    if (!L.interior[v] || !(P.r[v] > 0.0)) continue;
    ++R.interior_vertices;
    if (P.r[v] >= space.R) throw DomainError("vertex radius beyond the comparison space range");
    const double bound = (space.m - 1) * space.eta_W(P.r[v]);
    const double scale = std::max(std::abs(bound), std::numeric_limits<double>::min());
    const bool violated = L.value[v] < bound - slack_relative * std::abs(bound);
    if (P.r[v] <= cut) {
      ++R.near_pole;
      R.near_pole_violations += violated;
      continue;
    }
    ++R.eligible;
    R.violations += violated;
    const double res = (L.value[v] - bound) / scale;
    residuals.push_back(std::abs(res));
    if (std::abs(res) > worst) {
      worst = std::abs(res);
      R.worst_r = P.r[v];
      R.worst_laplacian = L.value[v];
      R.worst_bound = bound;
    }
  }
  if (R.eligible == 0)
    throw MeshError("no interior vertex with r > 2·h_max; every one-ring touches the boundary or the pole zone");
  R.violation_fraction = static_cast<double>(R.violations) / static_cast<double>(R.eligible);
  std::sort(residuals.begin(), residuals.end());
  auto quantile = [&](double q) {
    const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(residuals.size()))) ;
    return residuals[std::min(residuals.size() - 1, k == 0 ? 0 : k - 1)];
  };
  R.residual_median = quantile(0.5);
  R.residual_p95 = quantile(0.95);
  R.residual_max = residuals.back();
  const double near_rate =
      R.near_pole ? static_cast<double>(R.near_pole_violations) / static_cast<double>(R.near_pole) : 0.0;
  R.concentrated_near_pole = R.violations == 0 || near_rate >= R.violation_fraction;
  R.pass = R.violation_fraction < 0.05 && R.concentrated_near_pole;
  return R;
}

struct DivergenceReport {
  double t = 0.0;
  /// ∫_{D_t} of the PL interpolant of the vertex Laplacians.
  double lhs = 0.0;
  /// Σ over the level set of |∇r_f| L_f.
  double rhs = 0.0;
  double relative_mismatch = 0.0;
  bool pass = false;
};

inline DivergenceReport divergence_audit(const SampledSubmanifold& P, double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("audit radius must be positive");
  const auto L = cotangent_laplacian(P, P.r);
  std::size_t inside = 0;
  for (double x : P.r) inside += x <= t;
  if (inside <= 1) throw DomainError("t = " + format_double(t) + " lies inside the first ring; D_t has no interior");
  const IntrinsicKernel K = P.ambient.kernel();
  numerics::CompensatedSum lhs, rhs;
  for (std::uint32_t f = 0; f < P.faces.size(); ++f) {
    if (P.r_min(f) > t) continue;
    const auto& F = P.faces[f];
    for (auto v : F)
      if (!L.interior[v])
        throw InputMismatch("D_t reaches a vertex whose one-ring touches the boundary (t = " + format_double(t) + ")");
    const std::array<double, 3> val = {L.value[F[0]], L.value[F[1]], L.value[F[2]]};
    const double mean = (val[0] + val[1] + val[2]) / 3.0;
    const auto c = detail::cut_face(K, {P.r[F[0]], P.r[F[1]], P.r[F[2]]}, P.edge_length[f], P.half_angle[f],
                                    P.face_area[f], t);
    if (c.corner < 0) {
      lhs.add(c.area * mean);
      continue;
    }
    const int k = c.corner, i = (c.corner + 1) % 3, j = (c.corner + 2) % 3;
    const double vi = val[k] + c.lambda_a * (val[i] - val[k]);
    const double vj = val[k] + c.lambda_b * (val[j] - val[k]);
    const double piece = c.piece_area * (val[k] + vi + vj) / 3.0;
    lhs.add(c.inside_piece ? piece : P.face_area[f] * mean - piece);
    rhs.add(c.segment * P.grad_r_pl[f]);
  }
  DivergenceReport D;
  D.t = t;
  D.lhs = lhs.value();
  D.rhs = rhs.value();
  D.relative_mismatch = std::abs(D.lhs - D.rhs) / std::max(std::abs(D.rhs), std::numeric_limits<double>::min());
  D.pass = D.relative_mismatch < 0.02;
  return D;
}

} // namespace cheegerlab
