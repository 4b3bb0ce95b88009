#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "coneiso/candidates.hpp"
#include "coneiso/surface.hpp"

namespace coneiso {

enum class Verdict { VertexBallCap, InteriorSphere, BoundaryHalfSphereOnFlatPiece, NotStationary, NotStable, Inconclusive };
std::string to_string(Verdict v);

/// Everything the stability analysis knows about one surface.
///
/// Q_closed, umbilicity_defect and the curvature tests are reported raw; the
/// classifier compares their dimensionless versions (times A^{(2-n)/n}, so
/// they are dilation invariant) against the thresholds.
struct IndexFormReport {
  double Q_direct = 0;
  double Q_gradient_form = 0;
  double Q_closed = 0;
  double minkowski1_residual = 0;
  double minkowski2_residual = 0;
  double boundary_identity_residual = 0;
  bool boundary_identity_evaluated = false;
  double umbilicity_defect = 0;
  double mean_curvature = 0;  // area-weighted mean H
  double curvature_spread = 0;
  double contact_angle_residual = 0;
  double max_boundary_II = 0;  // max |II(N, N)| on the free boundary
  double area = 0;
  double consistency_tolerance = 0;
  Verdict verdict = Verdict::Inconclusive;
  std::vector<std::string> diagnostics;
  // resolution metadata
  std::string representation;
  std::size_t vertex_count = 0;
  double max_element_size = 0;
};

/// Area-weighted mean of the per-vertex mean curvature.
double mean_curvature(const SurfaceQuantities& q);

/// max_i |H_i - mean H| / |mean H|.
double curvature_spread(const SurfaceQuantities& q);

/// u_i = 1 + mean(H) g_i.
std::vector<double> test_function(const SurfaceQuantities& q);
std::vector<double> test_function(const DiscreteHypersurface& surface, const Tolerances& tol = {});

/// II(N, N) of the wall at each free-boundary vertex, with N projected to the
/// wall's tangent space.
std::vector<double> boundary_normal_curvatures(const DiscreteHypersurface& surface, const SurfaceQuantities& q,
                                               const Tolerances& tol = {});

struct IndexFormValues {
  double direct;
  double gradient_form;
};

/// Index form with the analytic Laplacian identity (valid for u = 1 + Hg)
/// and with the discrete gradient (valid for any u).
IndexFormValues index_form(const DiscreteHypersurface& surface, const SurfaceQuantities& q, std::span<const double> u,
                           const Tolerances& tol = {});

/// -int(|sigma|^2 - n H^2) - int_{boundary} II(N, N).
double index_form_closed(const DiscreteHypersurface& surface, const SurfaceQuantities& q, const Tolerances& tol = {});

struct MinkowskiResiduals {
  double first;
  double second;
};

/// Area-normalized residuals of int u = 0 and
/// int (|sigma|^2 - n H^2) g = -int_{boundary} II(N, N) g.
MinkowskiResiduals minkowski_checks(const DiscreteHypersurface& surface, const SurfaceQuantities& q,
                                    const Tolerances& tol = {});

/// |int (1 + H_i g_i)| / area with pointwise H_i taken from the discrete
/// mean-curvature vector. Vanishes to rounding on closed surfaces.
double minkowski1_pointwise_residual(const SurfaceQuantities& q);

/// max over the free boundary of |dg/dnu + II(N, N) g|. Throws
/// OrthogonalityViolated when the contact residual exceeds the stationarity
/// threshold.
double boundary_identity(const DiscreteHypersurface& surface, const SurfaceQuantities& q, const Tolerances& tol = {});

struct SphereFit {
  Eigen::VectorXd center;
  double radius;
  double residual;  // max | |x - c| - R | / R
};
SphereFit fit_sphere(const DiscreteHypersurface& surface);

IndexFormReport analyze(const DiscreteHypersurface& surface, const Tolerances& tol = {});
Verdict classify(const DiscreteHypersurface& surface, const Tolerances& tol = {});

json to_json(const IndexFormReport& r);
std::string render_table(const IndexFormReport& r);

struct ProfileDerivativeResiduals {
  double dPdV;                     // central-difference dP/dV
  double expected_dPdV;            // n H = n / r
  double dPdV_residual;            // |dPdV - n / r|
  double second_derivative;        // d^2 P^{(n+1)/n} / dV^2
  double convexity_residual;       // |second_derivative|
};

/// A one-parameter candidate family indexed by radius.
using CandidateFamily = std::function<CandidateRegion(double r)>;

/// Differentiates P(V) along `family` at radius r (vertex balls by default):
/// dP/dV by central differences with step dr, and the second V-derivative of
/// P^{(n+1)/n} with step 1e-2 V. Throws if the volume is not increasing.
ProfileDerivativeResiduals profile_derivative_checks(const ConeSpec& cone, double r = 1.0, double dr = 1e-4,
                                                     const CandidateFamily& family = {});

}  // namespace coneiso
