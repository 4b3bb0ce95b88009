#pragma once

#include <Eigen/Core>
#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "coneiso/cone.hpp"
#include "coneiso/io.hpp"

namespace coneiso {

enum class Representation { Polyline, Axisymmetric, TriangleMesh };
std::string to_string(Representation r);

/// A discretized relative boundary Sigma of a region Omega in a cone.
///
/// Curves (polylines in a sector or half-plane, meridian profiles (rho, z) of
/// surfaces of revolution in a round cone) store ordered vertices; the normal
/// N is the left normal of the direction of travel. Meshes store triangles
/// whose right-hand normal is N. In both cases N points into Omega: the
/// factories reverse the orientation when the enclosed volume comes out
/// negative and record the flip.
///
/// Boundary flags mark vertices lying on the cone wall. Open curves get their
/// flags from the geometry; meshes carry them explicitly.
class DiscreteHypersurface {
 public:
  static DiscreteHypersurface polyline(ConeSpec cone, std::vector<Eigen::Vector2d> vertices, bool closed = false,
                                       const Tolerances& tol = {});
  static DiscreteHypersurface axisymmetric(ConeSpec cone, std::vector<Eigen::Vector2d> meridian,
                                           const Tolerances& tol = {});
  static DiscreteHypersurface mesh(ConeSpec cone, std::vector<Eigen::Vector3d> vertices,
                                   std::vector<std::array<int, 3>> triangles, std::vector<bool> boundary_flags,
                                   const Tolerances& tol = {});

  Representation representation() const { return rep_; }
  const ConeSpec& cone() const { return cone_; }
  /// Interface dimension n (1 for polylines, 2 otherwise).
  int n() const { return rep_ == Representation::Polyline ? 1 : 2; }
  bool is_curve() const { return rep_ != Representation::TriangleMesh; }
  bool closed() const { return closed_; }
  bool orientation_flipped() const { return flipped_; }

  std::size_t vertex_count() const;
  const std::vector<Eigen::Vector2d>& curve_vertices() const { return curve_; }
  const std::vector<Eigen::Vector3d>& mesh_vertices() const { return mesh_vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<bool>& boundary_flags() const { return boundary_; }

  /// Vertex position in the cone's ambient space. Meridian vertices (rho, z)
  /// embed as (rho, 0, z).
  Eigen::VectorXd ambient_position(std::size_t i) const;

  /// Dilation about the cone vertex.
  DiscreteHypersurface scaled(double lambda) const;

 private:
  DiscreteHypersurface(ConeSpec cone, Representation rep) : cone_(std::move(cone)), rep_(rep) {}
  void validate(const Tolerances& tol);
  void orient();

  ConeSpec cone_;
  Representation rep_;
  bool closed_ = false;
  bool flipped_ = false;
  std::vector<Eigen::Vector2d> curve_;
  std::vector<Eigen::Vector3d> mesh_vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<bool> boundary_;
};

/// Free-boundary vertex data (a point of the contact set with the wall).
struct BoundaryVertex {
  std::size_t index;
  Eigen::VectorXd conormal;     // inward unit normal nu to the boundary, tangent to Sigma
  Eigen::VectorXd wall_normal;  // inward normal nu* of the cone wall
  double length_weight;         // H^{n-1} measure attached to the vertex
};

/// Per-vertex discrete differential quantities. Mean curvature follows the
/// sum convention n H = sum of principal curvatures w.r.t. the inner normal,
/// so the boundary of a ball of radius r has H = 1/r.
struct SurfaceQuantities {
  int n = 0;
  std::vector<Eigen::VectorXd> position;
  std::vector<Eigen::VectorXd> normal;
  std::vector<double> mean_curvature;
  std::vector<double> sigma2;  // squared norm of the second fundamental form
  std::vector<double> support;  // g = <X, N>
  std::vector<double> area_weight;
  /// n H N assembled from the discrete area gradient, -grad_i(area) / w_i.
  std::vector<Eigen::VectorXd> curvature_vector;
  /// Vertices on the wall away from the cone vertex (the free boundary).
  std::vector<BoundaryVertex> boundary;
  double area = 0;
};

struct Measure {
  double area;
  double enclosed_volume;
};

double area(const DiscreteHypersurface& surface);
/// Flux formula -(n+1)^{-1} sum <X, N> dA. Requires every free end to lie on
/// the wall (or, for meridians, on the axis); the wall contributes nothing
/// because X is tangent to it.
double enclosed_volume(const DiscreteHypersurface& surface);
Measure measure(const DiscreteHypersurface& surface);

SurfaceQuantities quantities(const DiscreteHypersurface& surface, const Tolerances& tol = {});

/// max over free-boundary vertices of |<N, nu*>|; 0 for surfaces without one.
double contact_angle_residual(const DiscreteHypersurface& surface, const Tolerances& tol = {});
double contact_angle_residual(const SurfaceQuantities& q);

/// Subdivides every element `factor` times. Curve vertices are placed on the
/// local circumscribed circles; mesh midpoints are lifted along the normal and
/// boundary midpoints snapped back to the wall. `snap`, if given, projects
/// every new mesh vertex (e.g. onto an exact sphere).
DiscreteHypersurface refine(const DiscreteHypersurface& surface, int factor,
                            const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& snap = {});

/// Discrete Dirichlet energy sum over elements of |grad u|^2 dA, with u
/// interpolated linearly on each element.
double dirichlet_energy(const DiscreteHypersurface& surface, std::span<const double> u);

/// Derivative of a vertex field along the inward conormal at a free-boundary
/// vertex: one-sided fourth-order differences along curves, a least-squares
/// tangent-plane gradient on meshes.
double conormal_derivative(const DiscreteHypersurface& surface, const SurfaceQuantities& q,
                           std::span<const double> values, const BoundaryVertex& b);

/// Area and volume gradients in representation coordinates ((x, y), (rho, z)
/// or (x, y, z)).
std::vector<Eigen::VectorXd> area_gradient(const DiscreteHypersurface& surface);
std::vector<Eigen::VectorXd> volume_gradient(const DiscreteHypersurface& surface);

json surface_to_json(const DiscreteHypersurface& surface);
DiscreteHypersurface surface_from_json(const json& j, const ConeSpec& cone, const Tolerances& tol = {});

std::string quantities_csv(const SurfaceQuantities& q, const DiscreteHypersurface& surface);

// Low-level curve functionals shared with the optimizer. `meridian` selects
// surfaces of revolution (area 2 pi int rho ds, revolved volume).
struct CurveFunctionals {
  double area = 0;
  double volume = 0;
  std::vector<Eigen::Vector2d> area_gradient;
  std::vector<Eigen::Vector2d> volume_gradient;
};
CurveFunctionals curve_functionals(std::span<const Eigen::Vector2d> pts, bool meridian, bool closed,
                                   bool with_gradients = true);
/// Lumped vertex weights: half segment lengths for planar curves, hat-function
/// integrals of 2 pi rho for meridians.
std::vector<double> curve_vertex_weights(std::span<const Eigen::Vector2d> pts, bool meridian, bool closed);
/// True if two non-adjacent segments cross.
bool curve_self_intersects(std::span<const Eigen::Vector2d> pts, bool closed);

}  // namespace coneiso
