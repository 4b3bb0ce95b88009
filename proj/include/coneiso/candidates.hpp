#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "coneiso/cone.hpp"

namespace coneiso {

enum class CandidateKind { VertexBall, InteriorBall, BoundaryHalfBall };

std::string to_string(CandidateKind kind);

/// An analytic candidate region: a ball (or the part of it inside the cone)
/// with its relative perimeter and volume in closed form.
struct CandidateRegion {
  CandidateKind kind;
  double radius;
  Eigen::VectorXd center;
  double perimeter;
  double volume;
  // Set for boundary half-balls on cones without a flat wall piece: the value
  // is the limit of diverging half-balls, an upper bound that is not attained.
  bool asymptotic = false;
};

CandidateRegion vertex_ball(const ConeSpec& cone, double r);
CandidateRegion interior_ball(const ConeSpec& cone, double r);
CandidateRegion boundary_half_ball(const ConeSpec& cone, double r);

/// Dilation by lambda about the vertex: perimeter scales by lambda^n and volume
/// by lambda^{n+1}.
CandidateRegion scale_candidate(const CandidateRegion& c, double lambda, int n);

/// Isoperimetric profile of the half-space in R^{n+1}.
double halfspace_profile(int n, double volume);

/// Perimeter of the ball-type region of solid measure `omega` enclosing
/// `volume`: omega^{1/(n+1)} (n+1)^{n/(n+1)} V^{n/(n+1)}.
double ball_profile(double omega, int n, double volume);

enum class Winner { Vertex, HalfBall, Interior, Tie };
std::string to_string(Winner w);

struct CandidateProfile {
  double volume;
  std::vector<CandidateRegion> ranked;  // ascending perimeter
  Winner winner;
  double winner_perimeter;
  double halfspace_profile;

  const CandidateRegion& of(CandidateKind kind) const;
};

CandidateProfile candidate_profile(const ConeSpec& cone, double volume, const Tolerances& tol = {});

/// CSV header and one row per profile, 17 significant digits.
std::string candidate_profile_csv_header();
std::string candidate_profile_csv_row(const CandidateProfile& p);

enum class ExistenceConclusion { ExistsForAllVolumes, Unknown };
std::string to_string(ExistenceConclusion c);

struct ProbeRegion {
  double perimeter;
  double volume;
};

struct ExistenceReport {
  double solid_angle;
  double half_sphere_measure;  // c_n / 2
  bool half_volume_criterion;
  bool supporting_hyperplane_criterion;
  std::optional<ProbeRegion> profile_gap_certificate;
  ExistenceConclusion conclusion;
};

ExistenceReport existence_report(const ConeSpec& cone, const std::vector<ProbeRegion>& probes = {},
                                 const Tolerances& tol = {});

}  // namespace coneiso
