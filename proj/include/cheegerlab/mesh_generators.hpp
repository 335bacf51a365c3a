#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "cheegerlab/ambient_geometry.hpp"
#include "cheegerlab/error.hpp"

namespace cheegerlab {

enum class SurfaceKind { Plane, Catenoid, Helicoid, HyperbolicPlane };

inline std::string to_string(SurfaceKind k) {
  switch (k) {
  case SurfaceKind::Plane: return "plane";
  case SurfaceKind::Catenoid: return "catenoid";
  case SurfaceKind::Helicoid: return "helicoid";
  case SurfaceKind::HyperbolicPlane: return "h2-in-h3";
  }
  return "?";
}

inline SurfaceKind parse_surface_kind(std::string_view s) {
  if (s == "plane") return SurfaceKind::Plane;
  if (s == "catenoid") return SurfaceKind::Catenoid;
  if (s == "helicoid") return SurfaceKind::Helicoid;
  if (s == "h2-in-h3") return SurfaceKind::HyperbolicPlane;
  throw ParseError("unknown surface kind '" + std::string(s) + "' (plane, catenoid, helicoid, h2-in-h3)");
}

/// Ring-mesh density. Rings are spaced by radial_step (intrinsic length);
/// each ring gets max(min_sectors, circumference / arc_step) vertices,
/// rounded up to a multiple of 64.
struct MeshResolution {
  double radial_step = 0.1;
  double arc_step = 0.5;
  int min_sectors = 256;

  /// One refinement level halves both steps and doubles the sector floor.
  MeshResolution refined(int levels = 1) const {
    MeshResolution r = *this;
    for (int i = 0; i < levels; ++i) {
      r.radial_step *= 0.5;
      r.arc_step *= 0.5;
      r.min_sectors *= 2;
    }
    return r;
  }
};

inline MeshResolution default_resolution(SurfaceKind k) {
  switch (k) {
  case SurfaceKind::Plane: return {0.05, 0.5, 512};
  case SurfaceKind::Catenoid: return {0.25, 0.5, 256};
  case SurfaceKind::Helicoid: return {0.1, 0.25, 256};
  case SurfaceKind::HyperbolicPlane: return {1.0, 0.26, 256};
  }
  return {};
}

struct SurfaceParams {
  SurfaceKind kind = SurfaceKind::Plane;
  double t_max = 10.0;
  /// Catenoid neck radius.
  double neck = 1.0;
  /// Helicoid pitch c in (v cos u, v sin u, c u).
  double pitch = 1.0;
  /// Curvature of the hyperbolic ambient.
  double b = -1.0;
  MeshResolution resolution = default_resolution(SurfaceKind::Plane);
};

/// Smallest level-set resolution accepted by the generators.
inline constexpr std::size_t kMinLevelFaces = 256;

namespace detail {

inline int sector_count(double circumference, const MeshResolution& res) {
  const double want = std::max<double>(res.min_sectors, std::ceil(circumference / res.arc_step));
  if (!(want < 1 << 26)) throw DomainError("mesh resolution too fine");
  const int n = static_cast<int>(want);
  return (n + 63) / 64 * 64;
}

// Faces between ring A (inner, na vertices from a0) and ring B (nb from b0).
// Vertex j of a ring sits at angle 2πj/n; the merge compares angles exactly.
inline void zip_rings(std::vector<Face>& faces, std::uint32_t a0, std::uint32_t na, std::uint32_t b0,
                      std::uint32_t nb) {
  std::uint64_t i = 0, j = 0;
  while (i < na || j < nb) {
    const bool advance_a = j == nb || (i < na && (i + 1) * nb <= (j + 1) * na);
    const auto ai = a0 + static_cast<std::uint32_t>(i % na);
    const auto bj = b0 + static_cast<std::uint32_t>(j % nb);
    if (advance_a) {
      faces.push_back({ai, bj, a0 + static_cast<std::uint32_t>((i + 1) % na)});
      ++i;
    } else {
      faces.push_back({ai, bj, b0 + static_cast<std::uint32_t>((j + 1) % nb)});
      ++j;
    }
  }
}

struct RingLayout {
  std::vector<double> param;
  std::vector<int> sectors;
};

// Vertices: optional centre then ring after ring; faces: fan plus zippers.
inline SampledSubmanifold assemble_rings(const AmbientSpace& A, const RingLayout& layout, bool centre,
                                         const std::function<Point(double, double)>& at) {
  std::vector<Point> vertices;
  std::vector<Face> faces;
  std::vector<std::uint32_t> start;
  if (centre) vertices.push_back(A.project(at(0.0, 0.0)));
  for (std::size_t k = 0; k < layout.param.size(); ++k) {
    start.push_back(static_cast<std::uint32_t>(vertices.size()));
    const int n = layout.sectors[k];
    for (int j = 0; j < n; ++j)
      vertices.push_back(A.project(at(layout.param[k], 2 * std::numbers::pi * j / n)));
  }
  if (centre) {
    const auto n = static_cast<std::uint32_t>(layout.sectors[0]);
    for (std::uint32_t j = 0; j < n; ++j) faces.push_back({0, start[0] + j, start[0] + (j + 1) % n});
  }
  for (std::size_t k = 0; k + 1 < layout.param.size(); ++k)
    zip_rings(faces, start[k], layout.sectors[k], start[k + 1], layout.sectors[k + 1]);
  return SampledSubmanifold::build(A, std::move(vertices), std::move(faces));
}

// Each ring is sized by its own circumference, so refinement scales the
// whole layout uniformly.
inline std::vector<int> ring_sectors(const std::vector<double>& circ, const MeshResolution& res) {
  std::vector<int> n;
  n.reserve(circ.size());
  for (double c : circ) n.push_back(sector_count(c, res));
  return n;
}

inline std::size_t faces_crossing(const SampledSubmanifold& P, double t) {
  std::size_t n = 0;
  for (std::size_t f = 0; f < P.faces.size(); ++f)
    if (P.r_min(f) <= t && t < P.r_max(f)) ++n;
  return n;
}

// Uniform subdivision of (0, t] into steps no longer than h.
inline std::vector<double> uniform_rings(double t_max, double h) {
  const auto k = static_cast<std::size_t>(std::ceil(t_max / h - 1e-9));
  std::vector<double> rho(k);
  for (std::size_t i = 0; i < k; ++i) rho[i] = t_max * static_cast<double>(i + 1) / static_cast<double>(k);
  return rho;
}

inline SampledSubmanifold plane(const SurfaceParams& p) {
  RingLayout L;
  L.param = uniform_rings(p.t_max, p.resolution.radial_step);
  std::vector<double> circ;
  for (double rho : L.param) circ.push_back(2 * std::numbers::pi * rho);
  L.sectors = ring_sectors(circ, p.resolution);
  return assemble_rings(AmbientSpace::euclidean(3), L, true, [](double rho, double th) {
    return Point{rho * std::cos(th), rho * std::sin(th), 0.0, 0.0};
  });
}

inline SampledSubmanifold hyperbolic_plane(const SurfaceParams& p) {
  const AmbientSpace A = AmbientSpace::hyperboloid(3, p.b);
  const double s = A.s();
  RingLayout L;
  L.param = uniform_rings(p.t_max, p.resolution.radial_step);
  std::vector<double> circ;
  for (double rho : L.param) circ.push_back(2 * std::numbers::pi * std::sinh(s * rho) / s);
  L.sectors = ring_sectors(circ, p.resolution);
  return assemble_rings(A, L, true, [s](double rho, double th) {
    const double q = std::sinh(s * rho) / s;
    return Point{0.0, q * std::cos(th), q * std::sin(th), 0.0};
  });
}

// Catenoid (a cosh(v/a) cos θ, a cosh(v/a) sin θ, v), pole at the neck
// centre; rings are uniform in meridian arclength σ = a sinh(v/a).
inline SampledSubmanifold catenoid(const SurfaceParams& p) {
  const double a = p.neck;
  if (!(a > 0.0)) throw DomainError("catenoid neck must be positive");
  if (!(p.t_max > a)) throw DomainError("catenoid t_max must exceed the neck radius");
  auto radius = [a](double sigma) {
    const double v = a * std::asinh(sigma / a);
    return std::sqrt(a * a + sigma * sigma + v * v);
  };
  double lo = 0.0, hi = p.t_max;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (radius(mid) < p.t_max ? lo : hi) = mid;
  }
  const double S = hi;
  const auto k = static_cast<std::size_t>(std::ceil(2 * S / p.resolution.radial_step));
  RingLayout L;
  std::vector<double> circ;
  for (std::size_t i = 0; i <= k; ++i) {
    const double sigma = -S + 2 * S * static_cast<double>(i) / static_cast<double>(k);
    L.param.push_back(sigma);
    circ.push_back(2 * std::numbers::pi * std::sqrt(a * a + sigma * sigma));
  }
  L.sectors = ring_sectors(circ, p.resolution);
  return assemble_rings(AmbientSpace::euclidean(3), L, false, [a](double sigma, double th) {
    const double v = a * std::asinh(sigma / a);
    const double rho = std::sqrt(a * a + sigma * sigma);
    return Point{rho * std::cos(th), rho * std::sin(th), v, 0.0};
  });
}

// Helicoid (v cos u, v sin u, c u) in the polar chart v = ρ cos φ,
// u = ρ sin φ / c, where the extrinsic distance is exactly ρ.
inline SampledSubmanifold helicoid(const SurfaceParams& p) {
  const double c = p.pitch;
  if (!(c > 0.0)) throw DomainError("helicoid pitch must be positive");
  const double kk = 0.5 / c;
  // Radial stretch is at most sqrt(1 + ρ²/(4c²)); rings are uniform in its integral.
  auto stretch_integral = [kk](double rho) {
    return 0.5 * (rho * std::sqrt(1 + kk * kk * rho * rho) + std::asinh(kk * rho) / kk);
  };
  const double total = stretch_integral(p.t_max);
  const auto k = static_cast<std::size_t>(std::ceil(total / p.resolution.radial_step));
  auto ring_length_max = [c](double rho) {
    // Largest speed |∂X/∂φ| over the ring, times 2π.
    double best = 0.0;
    for (int j = 0; j < 512; ++j) {
      const double ph = 2 * std::numbers::pi * j / 512;
      const double v = rho * std::cos(ph);
      const double dv = -rho * std::sin(ph), du = rho * std::cos(ph) / c;
      best = std::max(best, std::sqrt(dv * dv + (v * v + c * c) * du * du));
    }
    return 2 * std::numbers::pi * best;
  };
  RingLayout L;
  std::vector<double> circ;
  for (std::size_t i = 1; i <= k; ++i) {
    const double target = total * static_cast<double>(i) / static_cast<double>(k);
    double lo = 0.0, hi = p.t_max;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (stretch_integral(mid) < target ? lo : hi) = mid;
    }
    const double rho = i == k ? p.t_max : 0.5 * (lo + hi);
    L.param.push_back(rho);
    circ.push_back(ring_length_max(rho));
  }
  L.sectors = ring_sectors(circ, p.resolution);
  return assemble_rings(AmbientSpace::euclidean(3), L, true, [c](double rho, double ph) {
    const double v = rho * std::cos(ph), u = rho * std::sin(ph) / c;
    return Point{v * std::cos(u), v * std::sin(u), c * u, 0.0};
  });
}

} // namespace detail

/// Parametric test surface, triangulated in rings around the pole.
/// Throws MeshError when fewer than kMinLevelFaces faces cross r = t_max/2.
inline SampledSubmanifold generate_surface(const SurfaceParams& p) {
  if (!(p.t_max > 0.0) || !std::isfinite(p.t_max)) throw DomainError("t_max must be positive and finite");
  const auto& res = p.resolution;
  if (!(res.radial_step > 0.0) || !(res.arc_step > 0.0) || res.min_sectors < 3)
    throw DomainError("mesh resolution parameters must be positive");
  SampledSubmanifold P;
  switch (p.kind) {
  case SurfaceKind::Plane: P = detail::plane(p); break;
  case SurfaceKind::Catenoid: P = detail::catenoid(p); break;
  case SurfaceKind::Helicoid: P = detail::helicoid(p); break;
  case SurfaceKind::HyperbolicPlane: P = detail::hyperbolic_plane(p); break;
  }
  const std::size_t crossing = detail::faces_crossing(P, 0.5 * p.t_max);
  if (crossing < kMinLevelFaces)
    throw MeshError("mesh too coarse: " + std::to_string(crossing) + " faces cross r = t_max/2, need " +
                    std::to_string(kMinLevelFaces));
  return P;
}

} // namespace cheegerlab
