#pragma once

#include <Eigen/Core>
#include <optional>
#include <variant>
#include <vector>

#include "coneiso/tolerances.hpp"

namespace coneiso {

using VecRef = Eigen::Ref<const Eigen::VectorXd>;

/// Planar wedge {angle in [0, theta]} bounded by the rays at angle 0 and theta.
struct Sector {
  double theta;
};

/// Round cone of half-angle alpha around the last coordinate axis.
struct Circular {
  double alpha;
};

/// Intersection of the half-spaces {<normal_k, x> >= 0}.
struct Polyhedral {
  std::vector<Eigen::VectorXd> normals;
};

/// {x_last >= 0}; the link is an open half-sphere.
struct HalfSpace {};

using ConeShape = std::variant<Sector, Circular, Polyhedral, HalfSpace>;

/// A solid cone M = 0 x C in R^{n+1} with vertex at the origin. Immutable
/// once constructed; the factories reject invalid parameters.
class ConeSpec {
 public:
  static ConeSpec sector(double theta);
  static ConeSpec circular(double alpha, int ambient_dim = 3);
  static ConeSpec polyhedral(std::vector<Eigen::VectorXd> normals,
                             const Tolerances& tol = {});
  static ConeSpec half_space(int ambient_dim);

  int ambient_dim() const { return ambient_dim_; }
  /// Dimension of the interface Sigma (n), one less than the ambient space.
  int n() const { return ambient_dim_ - 1; }
  const ConeShape& shape() const { return shape_; }

  /// A unit direction strictly inside the cone. For round cones and sectors
  /// this is the symmetry axis; for polyhedral cones the direction that
  /// maximizes the smallest facet clearance.
  const Eigen::VectorXd& interior_direction() const { return interior_; }

  bool operator==(const ConeSpec& other) const;

 private:
  ConeSpec(int ambient_dim, ConeShape shape, Eigen::VectorXd interior)
      : ambient_dim_(ambient_dim), shape_(std::move(shape)), interior_(std::move(interior)) {}

  int ambient_dim_;
  ConeShape shape_;
  Eigen::VectorXd interior_;
};

/// A point on the cone wall away from the vertex together with the inward
/// unit normal nu* of the wall there.
struct BoundaryPoint {
  Eigen::VectorXd position;
  Eigen::VectorXd inward_normal;
};

struct SolidAngleEstimate {
  double value;
  double error_bound;  // absolute
};

/// H^n(S^n): 2 pi for the circle, 4 pi for the 2-sphere.
double sphere_measure(int n);

/// H^n(C), the measure of the cone's link on the unit sphere.
double solid_angle(const ConeSpec& cone);
SolidAngleEstimate solid_angle_estimate(const ConeSpec& cone);

bool is_convex(const ConeSpec& cone);

/// Membership in the closed cone (the vertex belongs to it).
bool contains(const ConeSpec& cone, const VecRef& x, const Tolerances& tol = {});

/// Euclidean distance from x to the cone wall (unsigned; for exterior points
/// this is the distance to the cone).
double distance_to_boundary(const ConeSpec& cone, const VecRef& x);

/// Nearest point of the cone wall to x.
Eigen::VectorXd project_to_boundary(const ConeSpec& cone, const VecRef& x);

/// Validates that x lies on the wall (not at the vertex, not on a polyhedral
/// edge) and attaches the inward normal.
BoundaryPoint boundary_point(const ConeSpec& cone, const VecRef& x, const Tolerances& tol = {});

/// Normal curvature II(v, v) of the wall w.r.t. the inner normal, for a unit
/// vector v tangent to the wall at p.
double boundary_II(const ConeSpec& cone, const BoundaryPoint& p, const VecRef& v,
                   const Tolerances& tol = {});

/// The same second fundamental form evaluated as a quadratic form on an
/// arbitrary tangent vector (no unit-length requirement).
double boundary_II_form(const ConeSpec& cone, const BoundaryPoint& p, const VecRef& v);

/// Index of the flat wall piece containing x, if x lies on one. Sectors have
/// pieces 0 (ray at angle 0) and 1 (ray at theta); polyhedral cones one per
/// facet; half-spaces and Circular(pi/2) a single plane. Round cones with
/// alpha != pi/2 have none.
std::optional<int> flat_piece_at(const ConeSpec& cone, const VecRef& x, const Tolerances& tol = {});

/// True if some part of the wall is flat (admits boundary half-balls).
bool has_flat_boundary(const ConeSpec& cone);

/// True if the cone is a half-space in any of its representations.
bool is_half_space(const ConeSpec& cone, const Tolerances& tol = {});

}  // namespace coneiso
