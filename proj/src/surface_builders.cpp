#include "coneiso/surface_builders.hpp"

#include <cmath>
#include <numbers>

#include "coneiso/errors.hpp"

namespace coneiso {

namespace {

constexpr double kPi = std::numbers::pi;

double wedge_angle(const ConeSpec& cone) {
  if (cone.ambient_dim() != 2) throw ValidationError("planar construction needs ambient dimension 2");
  if (const auto* s = std::get_if<Sector>(&cone.shape())) return s->theta;
  if (std::holds_alternative<HalfSpace>(cone.shape())) return kPi;
  throw ValidationError("planar construction needs a sector or a half-plane");
}

double cap_angle(const ConeSpec& cone) {
  if (cone.ambient_dim() != 3) throw ValidationError("cap construction needs ambient dimension 3");
  if (const auto* c = std::get_if<Circular>(&cone.shape())) return c->alpha;
  if (std::holds_alternative<HalfSpace>(cone.shape())) return kPi / 2;
  throw ValidationError("cap construction needs a round cone or a half-space");
}

void require_segments(int segments, int minimum) {
  if (segments < minimum) throw ValidationError("too few segments: " + std::to_string(segments));
}

// Ring-and-pole triangulation of a disk-like patch; ring k has `sectors`
// vertices, the pole is vertex 0.
std::vector<std::array<int, 3>> polar_triangles(int rings, int sectors) {
  std::vector<std::array<int, 3>> tris;
  auto id = [sectors](int ring, int j) { return 1 + (ring - 1) * sectors + ((j % sectors) + sectors) % sectors; };
  for (int j = 0; j < sectors; ++j) tris.push_back({0, id(1, j), id(1, j + 1)});
  for (int k = 1; k < rings; ++k) {
    for (int j = 0; j < sectors; ++j) {
      tris.push_back({id(k, j), id(k + 1, j), id(k + 1, j + 1)});
      tris.push_back({id(k, j), id(k + 1, j + 1), id(k, j + 1)});
    }
  }
  return tris;
}

std::vector<Eigen::Vector2d> arc_points(const Eigen::Vector2d& center, double r, double from, double to,
                                        int segments) {
  require_segments(segments, 2);
  if (!(r > 0)) throw ValidationError("radius must be positive");
  std::vector<Eigen::Vector2d> pts;
  for (int i = 0; i <= segments; ++i) {
    const double t = from + (to - from) * i / segments;
    pts.push_back(center + r * Eigen::Vector2d(std::cos(t), std::sin(t)));
  }
  return pts;
}

}  // namespace

DiscreteHypersurface circle_arc(const ConeSpec& cone, const Eigen::Vector2d& center, double r, double from, double to,
                                int segments) {
  return DiscreteHypersurface::polyline(cone, arc_points(center, r, from, to, segments));
}

DiscreteHypersurface vertex_arc(const ConeSpec& cone, double r, int segments) {
  const double theta = wedge_angle(cone);
  auto pts = arc_points(Eigen::Vector2d::Zero(), r, 0.0, theta, segments);
  // sin(theta), cos(theta) are not exact; put the last vertex exactly on the ray
  pts.back() = r * Eigen::Vector2d(std::cos(theta), std::sin(theta));
  pts.front() = Eigen::Vector2d(r, 0.0);
  return DiscreteHypersurface::polyline(cone, std::move(pts));
}

DiscreteHypersurface half_circle_on_ray(const ConeSpec& cone, double d, double r, int segments) {
  wedge_angle(cone);
  if (!(r > 0) || d < r) throw ValidationError("half-circle must stand on the ray: need 0 < r <= d");
  auto pts = arc_points(Eigen::Vector2d(d, 0.0), r, 0.0, kPi, segments);
  pts.front() = {d + r, 0.0};
  pts.back() = {d - r, 0.0};
  return DiscreteHypersurface::polyline(cone, std::move(pts));
}

DiscreteHypersurface closed_circle(const ConeSpec& cone, const Eigen::Vector2d& center, double r, int segments) {
  require_segments(segments, 3);
  if (!(r > 0)) throw ValidationError("radius must be positive");
  std::vector<Eigen::Vector2d> pts;
  for (int i = 0; i < segments; ++i) {
    const double t = 2 * kPi * i / segments;
    pts.push_back(center + r * Eigen::Vector2d(std::cos(t), std::sin(t)));
  }
  return DiscreteHypersurface::polyline(cone, std::move(pts), true);
}

DiscreteHypersurface tilted_arc(const ConeSpec& cone, double r, double tilt, int segments) {
  // Circle centered below the wall line y = 0; it crosses the line at the
  // angle 90 - tilt.
  const double h = r * std::sin(tilt);
  const double half_chord = r * std::cos(tilt);
  auto pts = arc_points(Eigen::Vector2d(0.0, -h), r, tilt, kPi - tilt, segments);
  pts.front() = {half_chord, 0.0};
  pts.back() = {-half_chord, 0.0};
  return DiscreteHypersurface::polyline(cone, std::move(pts));
}

DiscreteHypersurface meridian_vertex_cap(const ConeSpec& cone, double r, int segments) {
  const double alpha = cap_angle(cone);
  require_segments(segments, 2);
  if (!(r > 0)) throw ValidationError("radius must be positive");
  std::vector<Eigen::Vector2d> pts;
  for (int i = 0; i <= segments; ++i) {
    const double phi = alpha * i / segments;
    pts.emplace_back(r * std::sin(phi), r * std::cos(phi));
  }
  pts.front() = {0.0, r};
  if (alpha == kPi / 2) pts.back() = {r, 0.0};
  return DiscreteHypersurface::axisymmetric(cone, std::move(pts));
}

DiscreteHypersurface meridian_ellipsoid(const ConeSpec& cone, double z0, double a, double b, int segments) {
  cap_angle(cone);
  require_segments(segments, 3);
  if (!(a > 0) || !(b > 0)) throw ValidationError("semi-axes must be positive");
  std::vector<Eigen::Vector2d> pts;
  for (int i = 0; i <= segments; ++i) {
    const double t = kPi * i / segments;
    pts.emplace_back(a * std::sin(t), z0 + b * std::cos(t));
  }
  pts.front() = {0.0, z0 + b};
  pts.back() = {0.0, z0 - b};
  return DiscreteHypersurface::axisymmetric(cone, std::move(pts));
}

std::function<Eigen::Vector3d(const Eigen::Vector3d&)> sphere_snap(const Eigen::Vector3d& center, double r) {
  return [center, r](const Eigen::Vector3d& x) -> Eigen::Vector3d { return center + r * (x - center).normalized(); };
}

DiscreteHypersurface icosphere(const ConeSpec& cone, int level, double r, const Eigen::Vector3d& center) {
  if (level < 0) throw ValidationError("subdivision level must be >= 0");
  if (!(r > 0)) throw ValidationError("radius must be positive");
  const double t = (1 + std::sqrt(5.0)) / 2;
  std::vector<Eigen::Vector3d> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                                    {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p = center + r * p.normalized();
  std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                       {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                       {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                       {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  auto base = DiscreteHypersurface::mesh(cone, std::move(v), std::move(f), {});
  return refine(base, 1 << level, sphere_snap(center, r));
}

DiscreteHypersurface ellipsoid_mesh(const ConeSpec& cone, int level, const Eigen::Vector3d& axes,
                                    const Eigen::Vector3d& center) {
  // Build around the origin in a half-space first so the unit sphere is valid
  // regardless of the target cone, then map.
  const auto unit = icosphere(ConeSpec::half_space(3), level, 1.0, Eigen::Vector3d(0, 0, 2));
  std::vector<Eigen::Vector3d> pts;
  for (const auto& p : unit.mesh_vertices()) {
    pts.push_back(center + (p - Eigen::Vector3d(0, 0, 2)).cwiseProduct(axes));
  }
  return DiscreteHypersurface::mesh(cone, std::move(pts), unit.triangles(), {});
}

DiscreteHypersurface hemisphere_on_plane(const ConeSpec& cone, int level, double r, const Eigen::Vector3d& center) {
  if (level < 0) throw ValidationError("subdivision level must be >= 0");
  if (!(r > 0)) throw ValidationError("radius must be positive");
  if (center.z() != 0) throw ValidationError("hemisphere center must lie on the plane z = 0");
  std::vector<Eigen::Vector3d> v = {center + r * Eigen::Vector3d(1, 0, 0), center + r * Eigen::Vector3d(0, 1, 0),
                                    center + r * Eigen::Vector3d(-1, 0, 0), center + r * Eigen::Vector3d(0, -1, 0),
                                    center + r * Eigen::Vector3d(0, 0, 1)};
  std::vector<std::array<int, 3>> f = {{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}};
  std::vector<bool> flags = {true, true, true, true, false};
  auto base = DiscreteHypersurface::mesh(cone, std::move(v), std::move(f), std::move(flags));
  return refine(base, 1 << level, sphere_snap(center, r));
}

DiscreteHypersurface vertex_cap_mesh(const ConeSpec& cone, double r, int rings, int sectors) {
  const double alpha = cap_angle(cone);
  if (rings < 1 || sectors < 3) throw ValidationError("cap mesh needs rings >= 1 and sectors >= 3");
  if (!(r > 0)) throw ValidationError("radius must be positive");
  std::vector<Eigen::Vector3d> v = {{0, 0, r}};
  std::vector<bool> flags = {false};
  for (int k = 1; k <= rings; ++k) {
    const double phi = alpha * k / rings;
    for (int j = 0; j < sectors; ++j) {
      const double t = 2 * kPi * j / sectors;
      const double rho = r * std::sin(phi);
      v.emplace_back(rho * std::cos(t), rho * std::sin(t), k == rings && alpha == kPi / 2 ? 0.0 : r * std::cos(phi));
      flags.push_back(k == rings);
    }
  }
  return DiscreteHypersurface::mesh(cone, std::move(v), polar_triangles(rings, sectors), std::move(flags));
}

DiscreteHypersurface flat_disk(const ConeSpec& cone, const Eigen::Vector2d& center, double height, double r,
                               int rings, int sectors) {
  if (rings < 1 || sectors < 3) throw ValidationError("disk mesh needs rings >= 1 and sectors >= 3");
  if (!(r > 0)) throw ValidationError("radius must be positive");
  std::vector<Eigen::Vector3d> v = {{center.x(), center.y(), height}};
  for (int k = 1; k <= rings; ++k) {
    const double rho = r * k / rings;
    for (int j = 0; j < sectors; ++j) {
      const double t = 2 * kPi * j / sectors;
      v.emplace_back(center.x() + rho * std::cos(t), center.y() + rho * std::sin(t), height);
    }
  }
  return DiscreteHypersurface::mesh(cone, std::move(v), polar_triangles(rings, sectors), {});
}

}  // namespace coneiso
