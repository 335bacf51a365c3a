#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "cheegerlab/error.hpp"
#include "cheegerlab/format.hpp"
#include "cheegerlab/numerics/summation.hpp"
#include "cheegerlab/parallel.hpp"

namespace cheegerlab {

/// Ambient coordinates. Euclidean n uses the first n slots, the hyperboloid
/// model of H^n uses n + 1 (slot 0 is the timelike coordinate).
using Point = std::array<double, 4>;

enum class AmbientModel { Euclidean, Hyperboloid };

/// Triangle geometry from side lengths in a space of constant curvature
/// -s² (s = 0 is flat). Every formula is in a cancellation-free form.
class IntrinsicKernel {
public:
  explicit IntrinsicKernel(double s = 0.0) : s_(s) {}

  double curvature_scale() const { return s_; }

  /// p and p - l_i for sides l (Kahan's ordering; exact sign for valid triangles).
  static std::array<double, 4> semiperimeter_terms(const std::array<double, 3>& l) {
    std::array<int, 3> idx = {0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int x, int y) { return l[x] > l[y]; });
    const double a = l[idx[0]], b = l[idx[1]], c = l[idx[2]];
    std::array<double, 4> out{};
    out[0] = 0.5 * (a + (b + c));
    out[1 + idx[0]] = 0.5 * (c - (a - b));
    out[1 + idx[1]] = 0.5 * (c + (a - b));
    out[1 + idx[2]] = 0.5 * (a + (b - c));
    return out;
  }

  /// Area of the triangle with sides l; 0 for degenerate or invalid sides.
  double area(const std::array<double, 3>& l) const {
    const auto p = semiperimeter_terms(scaled(l));
    if (!(p[1] > 0.0 && p[2] > 0.0 && p[3] > 0.0)) return 0.0;
    if (s_ == 0.0) return std::sqrt(p[0] * p[1] * p[2] * p[3]);
    // L'Huilier: tan(E/4)² = tanh(p/2) tanh((p-a)/2) tanh((p-b)/2) tanh((p-c)/2).
    const double prod = std::tanh(0.5 * p[0]) * std::tanh(0.5 * p[1]) * std::tanh(0.5 * p[2]) * std::tanh(0.5 * p[3]);
    return 4.0 * std::atan(std::sqrt(prod)) / (s_ * s_);
  }

  /// sin and cos of half the angle at vertex i, where sides are ordered
  /// l[0] = |v0 v1|, l[1] = |v1 v2|, l[2] = |v2 v0| (vertex i is between
  /// l[i] and l[(i+2)%3], opposite l[(i+1)%3]).
  std::array<double, 2> half_angle(const std::array<double, 3>& l, int i) const {
    const auto ls = scaled(l);
    const auto p = semiperimeter_terms(ls);
    const int adj1 = i, adj2 = (i + 2) % 3, opp = (i + 1) % 3;
    double sin2, cos2;
    if (s_ == 0.0) {
      const double denom = ls[adj1] * ls[adj2];
      sin2 = p[1 + adj1] * p[1 + adj2] / denom;
      cos2 = p[0] * p[1 + opp] / denom;
    } else {
      const double denom = std::sinh(ls[adj1]) * std::sinh(ls[adj2]);
      sin2 = std::sinh(p[1 + adj1]) * std::sinh(p[1 + adj2]) / denom;
      cos2 = std::sinh(p[0]) * std::sinh(p[1 + opp]) / denom;
    }
    const double sn = std::sqrt(std::clamp(sin2, 0.0, 1.0));
    const double cs = std::sqrt(std::clamp(cos2, 0.0, 1.0));
    const double norm = std::hypot(sn, cs);
    return {sn / norm, cs / norm};
  }

  /// Area of the triangle with two sides a, b enclosing an angle of half-angle (sh, ch).
  double sas_area(double a, double b, double sh, double ch) const {
    const double sin_g = 2 * sh * ch;
    const double cos_g = (ch - sh) * (ch + sh);
    if (s_ == 0.0) return 0.5 * a * b * sin_g;
    const double ta = std::tanh(0.5 * s_ * a), tb = std::tanh(0.5 * s_ * b);
    return 2.0 * std::atan2(ta * tb * sin_g, 1.0 - ta * tb * cos_g) / (s_ * s_);
  }

  /// Third side of the triangle with sides a, b and enclosed half-angle sine sh.
  double sas_side(double a, double b, double sh) const {
    if (s_ == 0.0) return std::sqrt((a - b) * (a - b) + 4 * a * b * sh * sh);
    const double x = s_ * a, y = s_ * b;
    const double d = std::sinh(0.5 * (x - y));
    return 2.0 * std::asinh(std::sqrt(d * d + std::sinh(x) * std::sinh(y) * sh * sh)) / s_;
  }

private:
  std::array<double, 3> scaled(const std::array<double, 3>& l) const {
    if (s_ == 0.0) return l;
    return {s_ * l[0], s_ * l[1], s_ * l[2]};
  }

  double s_;
};

/// The space form K^n(b), b <= 0, with pole o.
class AmbientSpace {
public:
  static AmbientSpace euclidean(int n = 3) {
    if (n < 2 || n > 3) throw DomainError("euclidean ambient supports n = 2 or 3");
    return AmbientSpace(AmbientModel::Euclidean, n, 0.0);
  }

  static AmbientSpace hyperboloid(int n = 3, double b = -1.0) {
    if (n < 2 || n > 3) throw DomainError("hyperboloid ambient supports n = 2 or 3");
    if (!(b < 0.0) || !std::isfinite(b)) throw DomainError("hyperboloid ambient needs b < 0");
    return AmbientSpace(AmbientModel::Hyperboloid, n, b);
  }

  AmbientModel model() const { return model_; }
  int n() const { return n_; }
  double b() const { return b_; }
  /// √-b (0 for Euclidean).
  double s() const { return s_; }
  /// Number of stored coordinates per point.
  int coords() const { return model_ == AmbientModel::Euclidean ? n_ : n_ + 1; }
  IntrinsicKernel kernel() const { return IntrinsicKernel(s_); }

  Point pole() const {
    Point o{};
    if (model_ == AmbientModel::Hyperboloid) o[0] = 1.0 / s_;
    return o;
  }

  /// Header tag for mesh files.
  std::string tag() const {
    if (model_ == AmbientModel::Euclidean) return "#ambient euclidean n=" + std::to_string(n_);
    return "#ambient hyperboloid b=" + format_double(b_) + " n=" + std::to_string(n_);
  }

  bool same_as(const AmbientSpace& o) const { return model_ == o.model_ && n_ == o.n_ && b_ == o.b_; }

  /// ⟨x, y⟩_L = -x0 y0 + Σ xi yi.
  static double minkowski(const Point& x, const Point& y) {
    return -x[0] * y[0] + x[1] * y[1] + x[2] * y[2] + x[3] * y[3];
  }

  /// On-model test. The hyperboloid residual is measured relative to x0²,
  /// the size of the terms that cancel in ⟨x, x⟩_L.
  bool on_model(const Point& x, double tol = 1e-9) const {
    for (int i = 0; i < 4; ++i) {
      if (!std::isfinite(x[i])) return false;
      if (i >= coords() && x[i] != 0.0) return false;
    }
    if (model_ == AmbientModel::Euclidean) return true;
    if (!(x[0] > 0.0)) return false;
    const double sx0 = s_ * x[0];
    const double residual = s_ * s_ * minkowski(x, x) + 1.0;
    return std::abs(residual) <= tol * std::max(1.0, sx0 * sx0);
  }

  /// Nearest model point: recomputes x0 from the spatial part.
  Point project(const Point& x) const {
    Point p = x;
    for (int i = coords(); i < 4; ++i) p[i] = 0.0;
    if (model_ == AmbientModel::Hyperboloid)
      p[0] = std::sqrt(1.0 / (s_ * s_) + p[1] * p[1] + p[2] * p[2] + p[3] * p[3]);
    return p;
  }

  double distance(const Point& x, const Point& y) const {
    if (model_ == AmbientModel::Euclidean) {
      const double d0 = x[0] - y[0], d1 = x[1] - y[1], d2 = x[2] - y[2];
      return std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);
    }
    // ⟨x-y, x-y⟩_L = (4/s²) sinh²(s d / 2).
    const double d0 = x[0] - y[0];
    const double d1 = x[1] - y[1], d2 = x[2] - y[2], d3 = x[3] - y[3];
    const double spatial = std::sqrt(d1 * d1 + d2 * d2 + d3 * d3);
    const double q = std::max(0.0, (spatial - std::abs(d0)) * (spatial + std::abs(d0)));
    return 2.0 / s_ * std::asinh(0.5 * s_ * std::sqrt(q));
  }

  /// r(x) = dist(o, x). Hyperbolic: sinh(s r) = s |x_spatial|, stable at all radii.
  double distance_to_pole(const Point& x) const {
    const double spatial = std::sqrt(x[1] * x[1] + x[2] * x[2] + x[3] * x[3]);
    if (model_ == AmbientModel::Euclidean) return std::sqrt(x[0] * x[0] + spatial * spatial);
    return std::asinh(s_ * spatial) / s_;
  }

  /// Point at fraction lambda of the geodesic arclength from x to y.
  Point interpolate(const Point& x, const Point& y, double lambda) const {
    Point p{};
    if (model_ == AmbientModel::Euclidean) {
      for (int i = 0; i < 4; ++i) p[i] = x[i] + lambda * (y[i] - x[i]);
      return p;
    }
    const double d = s_ * distance(x, y);
    if (d < 1e-4) {
      for (int i = 0; i < 4; ++i) p[i] = x[i] + lambda * (y[i] - x[i]);
      return project(p);
    }
    const double wx = std::sinh((1 - lambda) * d) / std::sinh(d);
    const double wy = std::sinh(lambda * d) / std::sinh(d);
    for (int i = 0; i < 4; ++i) p[i] = wx * x[i] + wy * y[i];
    return project(p);
  }

  /// Area of the (geodesic) triangle xyz; 0 when degenerate.
  double triangle_area_unchecked(const Point& x, const Point& y, const Point& z) const {
    if (model_ == AmbientModel::Euclidean) {
      const double u0 = y[0] - x[0], u1 = y[1] - x[1], u2 = y[2] - x[2];
      const double v0 = z[0] - x[0], v1 = z[1] - x[1], v2 = z[2] - x[2];
      const double c0 = u1 * v2 - u2 * v1, c1 = u2 * v0 - u0 * v2, c2 = u0 * v1 - u1 * v0;
      return 0.5 * std::sqrt(c0 * c0 + c1 * c1 + c2 * c2);
    }
    return kernel().area({distance(x, y), distance(y, z), distance(z, x)});
  }

  /// Norm of the component of ∇^N r tangent to the face xyz, evaluated at
  /// its centroid. Equals 1 exactly for faces in a totally geodesic plane
  /// through the pole.
  double tangential_gradient(const Point& x, const Point& y, const Point& z) const {
    if (n_ == 2) return 1.0;
    Point c{};
    for (int i = 0; i < 4; ++i) c[i] = (x[i] + y[i] + z[i]) / 3.0;
    Point e1{}, e2{};
    for (int i = 0; i < 4; ++i) {
      e1[i] = y[i] - x[i];
      e2[i] = z[i] - x[i];
    }
    if (model_ == AmbientModel::Euclidean) {
      const double rc = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
      if (rc == 0.0) return 1.0;
      Point nu{e1[1] * e2[2] - e1[2] * e2[1], e1[2] * e2[0] - e1[0] * e2[2], e1[0] * e2[1] - e1[1] * e2[0], 0.0};
      const double nn = std::sqrt(nu[0] * nu[0] + nu[1] * nu[1] + nu[2] * nu[2]);
      if (nn == 0.0) return 1.0;
      const double dot = (c[0] * nu[0] + c[1] * nu[1] + c[2] * nu[2]) / (rc * nn);
      return std::sqrt(std::max(0.0, 1.0 - dot * dot));
    }
    c = project(c);
    // Normal inside T_c: Euclidean 4-cross product of (c, e1, e2), then the
    // time sign flip makes it Minkowski-orthogonal to all three.
    auto det3 = [](double a, double b, double cc, double d, double e, double f, double g, double h, double k) {
      return a * (e * k - f * h) - b * (d * k - f * g) + cc * (d * h - e * g);
    };
    Point w{};
    w[0] = det3(c[1], c[2], c[3], e1[1], e1[2], e1[3], e2[1], e2[2], e2[3]);
    w[1] = -det3(c[0], c[2], c[3], e1[0], e1[2], e1[3], e2[0], e2[2], e2[3]);
    w[2] = det3(c[0], c[1], c[3], e1[0], e1[1], e1[3], e2[0], e2[1], e2[3]);
    w[3] = -det3(c[0], c[1], c[2], e1[0], e1[1], e1[2], e2[0], e2[1], e2[2]);
    const Point nu{-w[0], w[1], w[2], w[3]};
    const double nu2 = minkowski(nu, nu);
    if (!(nu2 > 0.0)) return 1.0;
    // ∇r at c = (sinh(s r), s coth(s r) c_spatial).
    const double rc = distance_to_pole(c);
    if (rc == 0.0) return 1.0;
    const double sr = s_ * rc;
    const double k = s_ / std::tanh(sr);
    const Point grad{std::sinh(sr), k * c[1], k * c[2], k * c[3]};
    const double dot = minkowski(grad, nu);
    return std::sqrt(std::max(0.0, 1.0 - dot * dot / nu2));
  }

private:
  AmbientSpace(AmbientModel m, int n, double b) : model_(m), n_(n), b_(b), s_(std::sqrt(-b)) {}

  AmbientModel model_;
  int n_;
  double b_;
  double s_;
};

inline double extrinsic_distance(const AmbientSpace& A, const Point& x) {
  if (!A.on_model(x)) throw DomainError("point is not on the ambient model");
  return A.distance_to_pole(x);
}

/// Intrinsic area of a non-degenerate model triangle.
inline double face_area(const AmbientSpace& A, const std::array<Point, 3>& tri) {
  for (const auto& p : tri)
    if (!A.on_model(p)) throw DomainError("triangle vertex is not on the ambient model");
  const double area = A.triangle_area_unchecked(tri[0], tri[1], tri[2]);
  if (!(area > 0.0) || !std::isfinite(area)) throw DomainError("degenerate triangle");
  return area;
}

using Face = std::array<std::uint32_t, 3>;

/// Triangle mesh immersed in a space form, with per-vertex extrinsic
/// distance and per-face intrinsic data. Immutable after build().
struct SampledSubmanifold {
  AmbientSpace ambient = AmbientSpace::euclidean(3);
  int m = 2;
  std::vector<Point> vertices;
  std::vector<Face> faces;
  std::vector<double> r;
  std::vector<double> face_area;
  /// Side lengths {|v0v1|, |v1v2|, |v2v0|}, geodesic for the hyperboloid.
  std::vector<std::array<double, 3>> edge_length;
  /// (sin, cos) of half the interior angle at each corner.
  std::vector<std::array<std::array<double, 2>, 3>> half_angle;
  /// Norm of the gradient of the piecewise-linear interpolant of r.
  std::vector<double> grad_r_pl;
  /// Norm of ∇^N r projected onto the face, at the centroid.
  std::vector<double> grad_r_tangential;
  std::vector<std::uint8_t> boundary_vertex;
  /// Boundary edges as (v0, v1, owning face).
  std::vector<std::array<std::uint32_t, 3>> boundary_edges;
  /// min r over boundary vertices (+inf for closed meshes).
  double truncation_radius = std::numeric_limits<double>::infinity();
  double max_edge = 0.0;
  double mean_edge = 0.0;

  double r_min(std::size_t f) const { return std::min({r[faces[f][0]], r[faces[f][1]], r[faces[f][2]]}); }
  double r_max(std::size_t f) const { return std::max({r[faces[f][0]], r[faces[f][1]], r[faces[f][2]]}); }
  double total_area() const;

  static SampledSubmanifold build(const AmbientSpace& ambient, std::vector<Point> vertices, std::vector<Face> faces);
};

namespace detail {

// Gradient norm of the linear function with vertex values v on the flat
// triangle with the given side lengths.
inline double pl_gradient_norm(const std::array<double, 3>& l, const std::array<double, 3>& v,
                               const std::array<double, 2>& half0) {
  const double c0 = (half0[1] - half0[0]) * (half0[1] + half0[0]);
  const double s0 = 2 * half0[0] * half0[1];
  // v0 at origin, v1 on the x-axis, v2 at angle γ0 from it.
  const double x2 = l[2] * c0, y2 = l[2] * s0;
  const double gx = (v[1] - v[0]) / l[0];
  const double gy = ((v[2] - v[0]) - gx * x2) / y2;
  return std::hypot(gx, gy);
}

} // namespace detail

inline double SampledSubmanifold::total_area() const {
  std::vector<double> a(face_area);
  return numerics::pairwise_sum(a);
}

inline SampledSubmanifold SampledSubmanifold::build(const AmbientSpace& ambient, std::vector<Point> vertices,
                                                    std::vector<Face> faces) {
  SampledSubmanifold P;
  P.ambient = ambient;
  P.vertices = std::move(vertices);
  P.faces = std::move(faces);
  const std::size_t nv = P.vertices.size(), nf = P.faces.size();
  if (nf == 0) throw MeshError("mesh has no faces");
  if (nv >= std::numeric_limits<std::uint32_t>::max()) throw MeshError("too many vertices");

  for (std::size_t i = 0; i < nv; ++i)
    if (!ambient.on_model(P.vertices[i]))
      throw MeshError("vertex " + std::to_string(i) + " is not on the ambient model");
  for (std::size_t f = 0; f < nf; ++f) {
    const auto& F = P.faces[f];
    for (auto v : F)
      if (v >= nv) throw MeshError("face " + std::to_string(f) + " references a missing vertex");
    if (F[0] == F[1] || F[1] == F[2] || F[2] == F[0])
      throw MeshError("face " + std::to_string(f) + " repeats a vertex");
  }

  // Undirected edge incidence; more than two faces on an edge is non-manifold.
  std::vector<std::uint64_t> keys;
  keys.reserve(3 * nf);
  for (std::size_t f = 0; f < nf; ++f)
    for (int e = 0; e < 3; ++e) {
      std::uint64_t a = P.faces[f][e], b = P.faces[f][(e + 1) % 3];
      if (a > b) std::swap(a, b);
      keys.push_back((a << 32) | b);
    }
  std::vector<std::uint32_t> order(keys.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return keys[x] < keys[y] || (keys[x] == keys[y] && x < y); });
  P.boundary_vertex.assign(nv, 0);
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && keys[order[j]] == keys[order[i]]) ++j;
    if (j - i > 2) throw MeshError("mesh is not edge-manifold");
    if (j - i == 1) {
      const auto k = keys[order[i]];
      const auto a = static_cast<std::uint32_t>(k >> 32), b = static_cast<std::uint32_t>(k & 0xffffffffu);
      P.boundary_edges.push_back({a, b, order[i] / 3});
      P.boundary_vertex[a] = P.boundary_vertex[b] = 1;
    }
    i = j;
  }

  P.r.resize(nv);
  parallel_for(nv, [&](std::size_t i) { P.r[i] = ambient.distance_to_pole(P.vertices[i]); });
  for (std::size_t i = 0; i < nv; ++i)
    if (P.boundary_vertex[i]) P.truncation_radius = std::min(P.truncation_radius, P.r[i]);

  const IntrinsicKernel kernel = ambient.kernel();
  P.face_area.resize(nf);
  P.edge_length.resize(nf);
  P.half_angle.resize(nf);
  P.grad_r_pl.resize(nf);
  P.grad_r_tangential.resize(nf);
  parallel_for(nf, [&](std::size_t f) {
    const auto& F = P.faces[f];
    const Point& x = P.vertices[F[0]];
    const Point& y = P.vertices[F[1]];
    const Point& z = P.vertices[F[2]];
    const std::array<double, 3> l = {ambient.distance(x, y), ambient.distance(y, z), ambient.distance(z, x)};
    P.edge_length[f] = l;
    P.face_area[f] = kernel.area(l);
    for (int i = 0; i < 3; ++i) P.half_angle[f][i] = kernel.half_angle(l, i);
    P.grad_r_pl[f] = detail::pl_gradient_norm(l, {P.r[F[0]], P.r[F[1]], P.r[F[2]]}, P.half_angle[f][0]);
    P.grad_r_tangential[f] = ambient.tangential_gradient(x, y, z);
  });

  double edge_sum = 0.0;
  for (std::size_t f = 0; f < nf; ++f) {
    if (!(P.face_area[f] > 0.0) || !std::isfinite(P.face_area[f]))
      throw MeshError("face " + std::to_string(f) + " is degenerate");
    for (double l : P.edge_length[f]) {
      P.max_edge = std::max(P.max_edge, l);
      edge_sum += l;
    }
  }
  P.mean_edge = edge_sum / (3.0 * nf);
  return P;
}

} // namespace cheegerlab
