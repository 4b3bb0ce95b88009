#pragma once

#include <Eigen/Core>
#include <functional>

#include "coneiso/surface.hpp"

namespace coneiso {

// Exact-sample constructions of the surfaces the library reasons about. All
// vertices lie exactly on the underlying smooth surface.

/// Arc of the circle |x| = r across a planar cone (sector or half-plane).
DiscreteHypersurface vertex_arc(const ConeSpec& cone, double r, int segments);

/// Arc of the circle |x - center| = r from angle `from` to angle `to`
/// (radians, counterclockwise).
DiscreteHypersurface circle_arc(const ConeSpec& cone, const Eigen::Vector2d& center, double r, double from,
                                double to, int segments);

/// Half-circle of radius r standing on the ray at angle 0, centered at
/// distance d >= r from the vertex.
DiscreteHypersurface half_circle_on_ray(const ConeSpec& cone, double d, double r, int segments);

/// Closed circle inside a planar cone.
DiscreteHypersurface closed_circle(const ConeSpec& cone, const Eigen::Vector2d& center, double r, int segments);

/// A circular arc in the half-plane {y >= 0} meeting the wall at angle
/// 90 - tilt degrees on both ends (tilt in radians).
DiscreteHypersurface tilted_arc(const ConeSpec& cone, double r, double tilt, int segments);

/// Meridian of the spherical cap |x| = r inside a round cone (or a half-space).
DiscreteHypersurface meridian_vertex_cap(const ConeSpec& cone, double r, int segments);

/// Meridian of the ellipsoid of revolution with semi-axes a (radial) and
/// b (axial) centered at height z0 on the axis. a = b gives a sphere.
DiscreteHypersurface meridian_ellipsoid(const ConeSpec& cone, double z0, double a, double b, int segments);

/// Icosahedron subdivided `level` times and pushed onto the sphere.
DiscreteHypersurface icosphere(const ConeSpec& cone, int level, double r, const Eigen::Vector3d& center);

/// Icosphere scaled by `axes` about its center.
DiscreteHypersurface ellipsoid_mesh(const ConeSpec& cone, int level, const Eigen::Vector3d& axes,
                                    const Eigen::Vector3d& center);

/// Upper half of a sphere standing on the plane z = 0 (octahedron-based).
DiscreteHypersurface hemisphere_on_plane(const ConeSpec& cone, int level, double r, const Eigen::Vector3d& center);

/// Spherical cap |x| = r in a round cone, polar grid with the last ring on
/// the wall.
DiscreteHypersurface vertex_cap_mesh(const ConeSpec& cone, double r, int rings, int sectors);

/// Flat disk {z = height, |(x, y) - center| <= r}.
DiscreteHypersurface flat_disk(const ConeSpec& cone, const Eigen::Vector2d& center, double height, double r,
                               int rings, int sectors);

/// Radial projection onto the sphere |x - center| = r.
std::function<Eigen::Vector3d(const Eigen::Vector3d&)> sphere_snap(const Eigen::Vector3d& center, double r);

}  // namespace coneiso
