#include "coneiso/candidates.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <variant>

#include "coneiso/errors.hpp"
#include "coneiso/io.hpp"

namespace coneiso {

namespace {

void require_positive(double value, const char* what) {
  if (!(value > 0) || !std::isfinite(value)) {
    throw ValidationError(std::string(what) + " must be positive");
  }
}

// Radius of a ball-type region of solid measure omega with the given volume.
double radius_for_volume(double omega, int n, double volume) {
  return std::pow((n + 1) * volume / omega, 1.0 / (n + 1));
}

CandidateRegion ball_type(CandidateKind kind, double omega, int n, double r, Eigen::VectorXd center) {
  return CandidateRegion{kind, r, std::move(center), std::pow(r, n) * omega,
                         std::pow(r, n + 1) * omega / (n + 1)};
}

// A point on a flat piece of the wall, far enough from the vertex that a ball
// of radius r centered there only meets that piece.
Eigen::VectorXd flat_center(const ConeSpec& cone, double r) {
  const int dim = cone.ambient_dim();
  if (const auto* s = std::get_if<Sector>(&cone.shape())) {
    const double reach = r / std::sin(std::min(s->theta, std::numbers::pi) / 2) + r;
    return Eigen::Vector2d(2 * reach, 0.0);
  }
  if (const auto* p = std::get_if<Polyhedral>(&cone.shape())) {
    // Push the interior direction onto the first facet and walk outwards.
    const Eigen::VectorXd& m = cone.interior_direction();
    const Eigen::VectorXd& nk = p->normals.front();
    Eigen::VectorXd on_facet = m - m.dot(nk) * nk;
    if (on_facet.norm() < 1e-12) on_facet = Eigen::VectorXd::Unit(dim, 0) - nk(0) * nk;
    return on_facet.normalized() * (1e3 * r);
  }
  // Half-space (or Circular(pi/2)): any point of the boundary plane.
  Eigen::VectorXd c = Eigen::VectorXd::Zero(dim);
  c(0) = 2 * r;
  return c;
}

Eigen::VectorXd interior_center(const ConeSpec& cone, double r) {
  // Along the interior direction the distance to the wall grows linearly;
  // for any cone with nonempty interior some multiple of r clears the wall.
  const Eigen::VectorXd& m = cone.interior_direction();
  double t = 2 * r;
  while (distance_to_boundary(cone, t * m) <= r) t *= 2;
  return t * m;
}

}  // namespace

std::string to_string(CandidateKind kind) {
  switch (kind) {
    case CandidateKind::VertexBall:
      return "vertex";
    case CandidateKind::InteriorBall:
      return "interior";
    case CandidateKind::BoundaryHalfBall:
      return "halfball";
  }
  return "?";
}

std::string to_string(Winner w) {
  switch (w) {
    case Winner::Vertex:
      return "vertex";
    case Winner::HalfBall:
      return "halfball";
    case Winner::Interior:
      return "interior";
    case Winner::Tie:
      return "tie";
  }
  return "?";
}

std::string to_string(ExistenceConclusion c) {
  return c == ExistenceConclusion::ExistsForAllVolumes ? "ExistsForAllVolumes" : "Unknown";
}

CandidateRegion vertex_ball(const ConeSpec& cone, double r) {
  require_positive(r, "radius");
  return ball_type(CandidateKind::VertexBall, solid_angle(cone), cone.n(), r,
                   Eigen::VectorXd::Zero(cone.ambient_dim()));
}

CandidateRegion interior_ball(const ConeSpec& cone, double r) {
  require_positive(r, "radius");
  return ball_type(CandidateKind::InteriorBall, sphere_measure(cone.n()), cone.n(), r,
                   interior_center(cone, r));
}

CandidateRegion boundary_half_ball(const ConeSpec& cone, double r) {
  require_positive(r, "radius");
  const bool flat = has_flat_boundary(cone);
  Eigen::VectorXd center = flat ? flat_center(cone, r) : Eigen::VectorXd::Zero(cone.ambient_dim());
  auto region = ball_type(CandidateKind::BoundaryHalfBall, sphere_measure(cone.n()) / 2, cone.n(), r,
                          std::move(center));
  region.asymptotic = !flat;
  return region;
}

CandidateRegion scale_candidate(const CandidateRegion& c, double lambda, int n) {
  require_positive(lambda, "scale factor");
  CandidateRegion out = c;
  out.radius = c.radius * lambda;
  out.center = c.center * lambda;
  out.perimeter = c.perimeter * std::pow(lambda, n);
  out.volume = c.volume * std::pow(lambda, n + 1);
  return out;
}

double ball_profile(double omega, int n, double volume) {
  return std::pow(omega, 1.0 / (n + 1)) * std::pow(n + 1.0, static_cast<double>(n) / (n + 1)) *
         std::pow(volume, static_cast<double>(n) / (n + 1));
}

double halfspace_profile(int n, double volume) {
  if (n < 1) throw ValidationError("interface dimension n must be >= 1");
  require_positive(volume, "volume");
  return ball_profile(sphere_measure(n) / 2, n, volume);
}

const CandidateRegion& CandidateProfile::of(CandidateKind kind) const {
  for (const auto& c : ranked) {
    if (c.kind == kind) return c;
  }
  throw ValidationError("candidate kind missing from profile");
}

CandidateProfile candidate_profile(const ConeSpec& cone, double volume, const Tolerances& tol) {
  require_positive(volume, "volume");
  const int n = cone.n();
  const double omega = solid_angle(cone);
  const double half = sphere_measure(n) / 2;
  std::vector<CandidateRegion> ranked{
      vertex_ball(cone, radius_for_volume(omega, n, volume)),
      boundary_half_ball(cone, radius_for_volume(half, n, volume)),
      interior_ball(cone, radius_for_volume(2 * half, n, volume)),
  };
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.perimeter < b.perimeter; });

  CandidateProfile out{volume, ranked, Winner::Vertex, ranked.front().perimeter, halfspace_profile(n, volume)};
  const double pv = out.of(CandidateKind::VertexBall).perimeter;
  const double ph = out.of(CandidateKind::BoundaryHalfBall).perimeter;
  if (std::abs(pv - ph) <= tol.tie * std::max(pv, ph)) {
    out.winner = Winner::Tie;
  } else {
    switch (ranked.front().kind) {
      case CandidateKind::VertexBall:
        out.winner = Winner::Vertex;
        break;
      case CandidateKind::BoundaryHalfBall:
        out.winner = Winner::HalfBall;
        break;
      case CandidateKind::InteriorBall:
        out.winner = Winner::Interior;
        break;
    }
  }
  return out;
}

std::string candidate_profile_csv_header() {
  return "volume,perimeter_vertex,perimeter_halfball,perimeter_interior,halfspace_profile,winner";
}

std::string candidate_profile_csv_row(const CandidateProfile& p) {
  return format_double(p.volume) + "," + format_double(p.of(CandidateKind::VertexBall).perimeter) + "," +
         format_double(p.of(CandidateKind::BoundaryHalfBall).perimeter) + "," +
         format_double(p.of(CandidateKind::InteriorBall).perimeter) + "," + format_double(p.halfspace_profile) +
         "," + to_string(p.winner);
}

ExistenceReport existence_report(const ConeSpec& cone, const std::vector<ProbeRegion>& probes,
                                 const Tolerances& tol) {
  const int n = cone.n();
  ExistenceReport report{};
  report.solid_angle = solid_angle(cone);
  report.half_sphere_measure = sphere_measure(n) / 2;
  report.half_volume_criterion = report.solid_angle <= report.half_sphere_measure;
  // A wall point with a local supporting hyperplane exists iff the wall is
  // somewhere flat or convex: always for sectors, half-spaces and polyhedral
  // cones; for round cones iff alpha <= pi/2.
  report.supporting_hyperplane_criterion =
      std::visit([](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Circular>) return s.alpha <= std::numbers::pi / 2;
        return true;
      }, cone.shape());

  auto witnesses = [&](const ProbeRegion& p) {
    return p.volume > 0 && p.perimeter < halfspace_profile(n, p.volume) - tol.profile_gap;
  };
  const ProbeRegion vertex_probe{vertex_ball(cone, 1.0).perimeter, vertex_ball(cone, 1.0).volume};
  if (witnesses(vertex_probe)) {
    report.profile_gap_certificate = vertex_probe;
  } else {
    for (const auto& p : probes) {
      if (witnesses(p)) {
        report.profile_gap_certificate = p;
        break;
      }
    }
  }
  const bool any = report.half_volume_criterion || report.supporting_hyperplane_criterion ||
                   report.profile_gap_certificate.has_value();
  report.conclusion = any ? ExistenceConclusion::ExistsForAllVolumes : ExistenceConclusion::Unknown;
  return report;
}

}  // namespace coneiso
