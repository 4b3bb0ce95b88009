#include "coneiso/stability.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "coneiso/errors.hpp"

namespace coneiso {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::VertexBallCap:
      return "VertexBallCap";
    case Verdict::InteriorSphere:
      return "InteriorSphere";
    case Verdict::BoundaryHalfSphereOnFlatPiece:
      return "BoundaryHalfSphereOnFlatPiece";
    case Verdict::NotStationary:
      return "NotStationary";
    case Verdict::NotStable:
      return "NotStable";
    case Verdict::Inconclusive:
      return "Inconclusive";
  }
  return "?";
}

double mean_curvature(const SurfaceQuantities& q) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < q.mean_curvature.size(); ++i) {
    num += q.area_weight[i] * q.mean_curvature[i];
    den += q.area_weight[i];
  }
  if (den == 0) throw ValidationError("surface has zero area");
  return num / den;
}

double curvature_spread(const SurfaceQuantities& q) {
  const double h = mean_curvature(q);
  if (h == 0) return std::numeric_limits<double>::infinity();
  double s = 0;
  for (double hi : q.mean_curvature) s = std::max(s, std::abs(hi - h) / std::abs(h));
  return s;
}

std::vector<double> test_function(const SurfaceQuantities& q) {
  const double h = mean_curvature(q);
  std::vector<double> u(q.support.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = 1 + h * q.support[i];
  return u;
}

std::vector<double> test_function(const DiscreteHypersurface& surface, const Tolerances& tol) {
  return test_function(quantities(surface, tol));
}

std::vector<double> boundary_normal_curvatures(const DiscreteHypersurface& surface, const SurfaceQuantities& q,
                                               const Tolerances& tol) {
  std::vector<double> out;
  for (const auto& b : q.boundary) {
    const auto bp = boundary_point(surface.cone(), q.position[b.index], tol);
    Eigen::VectorXd N = q.normal[b.index];
    N -= N.dot(bp.inward_normal) * bp.inward_normal;
    out.push_back(boundary_II_form(surface.cone(), bp, N));
  }
  return out;
}

IndexFormValues index_form(const DiscreteHypersurface& surface, const SurfaceQuantities& q, std::span<const double> u,
                           const Tolerances& tol) {
  if (u.size() != q.support.size()) throw ValidationError("test function size differs from vertex count");
  const auto II = boundary_normal_curvatures(surface, q, tol);
  const int n = q.n;
  double direct = 0, gradient = dirichlet_energy(surface, u);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double defect = q.sigma2[i] - n * q.mean_curvature[i] * q.mean_curvature[i];
    direct -= q.area_weight[i] * u[i] * defect;
    gradient -= q.area_weight[i] * q.sigma2[i] * u[i] * u[i];
  }
  for (std::size_t k = 0; k < q.boundary.size(); ++k) {
    const auto& b = q.boundary[k];
    direct -= b.length_weight * u[b.index] * II[k];
    gradient -= b.length_weight * II[k] * u[b.index] * u[b.index];
  }
  return {direct, gradient};
}

namespace {

double umbilicity_integral(const SurfaceQuantities& q) {
  double d = 0;
  for (std::size_t i = 0; i < q.sigma2.size(); ++i) {
    d += q.area_weight[i] * (q.sigma2[i] - q.n * q.mean_curvature[i] * q.mean_curvature[i]);
  }
  return d;
}

double max_element_size(const DiscreteHypersurface& s) {
  double m = 0;
  if (s.is_curve()) {
    const auto& p = s.curve_vertices();
    for (std::size_t i = 0; i + 1 < p.size(); ++i) m = std::max(m, (p[i + 1] - p[i]).norm());
    if (s.closed()) m = std::max(m, (p.front() - p.back()).norm());
  } else {
    const auto& x = s.mesh_vertices();
    for (const auto& t : s.triangles()) {
      for (int k = 0; k < 3; ++k) m = std::max(m, (x[t[k]] - x[t[(k + 1) % 3]]).norm());
    }
  }
  return m;
}

}  // namespace

double index_form_closed(const DiscreteHypersurface& surface, const SurfaceQuantities& q, const Tolerances& tol) {
  const auto II = boundary_normal_curvatures(surface, q, tol);
  double Q = -umbilicity_integral(q);
  for (std::size_t k = 0; k < q.boundary.size(); ++k) Q -= q.boundary[k].length_weight * II[k];
  return Q;
}

MinkowskiResiduals minkowski_checks(const DiscreteHypersurface& surface, const SurfaceQuantities& q,
                                    const Tolerances& tol) {
  const auto u = test_function(q);
  const auto II = boundary_normal_curvatures(surface, q, tol);
  double first = 0, second = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    first += q.area_weight[i] * u[i];
    second += q.area_weight[i] * (q.sigma2[i] - q.n * q.mean_curvature[i] * q.mean_curvature[i]) * q.support[i];
  }
  for (std::size_t k = 0; k < q.boundary.size(); ++k) {
    const auto& b = q.boundary[k];
    second += b.length_weight * II[k] * q.support[b.index];
  }
  return {std::abs(first) / q.area, std::abs(second) / q.area};
}

double minkowski1_pointwise_residual(const SurfaceQuantities& q) {
  double s = 0;
  for (std::size_t i = 0; i < q.area_weight.size(); ++i) {
    s += q.area_weight[i] * (1 + q.curvature_vector[i].dot(q.position[i]) / q.n);
  }
  return std::abs(s) / q.area;
}

double boundary_identity(const DiscreteHypersurface& surface, const SurfaceQuantities& q, const Tolerances& tol) {
  const double contact = contact_angle_residual(q);
  if (contact > tol.stationarity) {
    throw OrthogonalityViolated("surface does not meet the wall orthogonally (contact residual " +
                                format_double(contact) + ")");
  }
  const auto II = boundary_normal_curvatures(surface, q, tol);
  double r = 0;
  for (std::size_t k = 0; k < q.boundary.size(); ++k) {
    const auto& b = q.boundary[k];
    const double dg = conormal_derivative(surface, q, q.support, b);
    r = std::max(r, std::abs(dg + II[k] * q.support[b.index]));
  }
  return r;
}

SphereFit fit_sphere(const DiscreteHypersurface& surface) {
  const std::size_t nv = surface.vertex_count();
  std::vector<Eigen::VectorXd> pts;
  for (std::size_t i = 0; i < nv; ++i) pts.push_back(surface.ambient_position(i));
  const int dim = static_cast<int>(pts.front().size());
  SphereFit fit;
  if (surface.representation() == Representation::Axisymmetric) {
    // center constrained to the axis: rho^2 + z^2 = 2 c z + k
    Eigen::MatrixXd A(nv, 2);
    Eigen::VectorXd b(nv);
    for (std::size_t i = 0; i < nv; ++i) {
      const double z = pts[i](2);
      A.row(i) << 2 * z, 1.0;
      b(i) = pts[i].squaredNorm();
    }
    const Eigen::VectorXd sol = A.colPivHouseholderQr().solve(b);
    fit.center = Eigen::VectorXd::Zero(3);
    fit.center(2) = sol(0);
    fit.radius = std::sqrt(std::max(0.0, sol(1) + sol(0) * sol(0)));
  } else {
    Eigen::MatrixXd A(nv, dim + 1);
    Eigen::VectorXd b(nv);
    for (std::size_t i = 0; i < nv; ++i) {
      A.row(i).head(dim) = 2 * pts[i].transpose();
      A(i, dim) = 1.0;
      b(i) = pts[i].squaredNorm();
    }
    const Eigen::VectorXd sol = A.colPivHouseholderQr().solve(b);
    fit.center = sol.head(dim);
    fit.radius = std::sqrt(std::max(0.0, sol(dim) + fit.center.squaredNorm()));
  }
  fit.residual = 0;
  for (const auto& p : pts) {
    fit.residual = std::max(fit.residual, std::abs((p - fit.center).norm() - fit.radius) / fit.radius);
  }
  return fit;
}

namespace {

Verdict sphere_verdict(const DiscreteHypersurface& surface, const SurfaceQuantities& q, const Tolerances& tol,
                       std::vector<std::string>& diag) {
  const auto fit = fit_sphere(surface);
  if (!(fit.radius > 0) || fit.residual > tol.sphere_fit) {
    diag.push_back("sphere fit residual " + format_double(fit.residual) + " above threshold");
    return Verdict::Inconclusive;
  }
  const ConeSpec& cone = surface.cone();
  const double slack = tol.sphere_fit * fit.radius;
  if (fit.center.norm() <= slack) {
    // In a half-space every boundary point is a vertex; the cap centered at
    // 0 is a half-sphere on the flat wall.
    return is_half_space(cone) ? Verdict::BoundaryHalfSphereOnFlatPiece : Verdict::VertexBallCap;
  }
  const bool touches_wall =
      std::any_of(surface.boundary_flags().begin(), surface.boundary_flags().end(), [](bool b) { return b; });
  if (!touches_wall) {
    if (distance_to_boundary(cone, fit.center) >= fit.radius - slack && contains(cone, fit.center)) {
      return Verdict::InteriorSphere;
    }
    diag.push_back("closed sphere is not inside the cone");
    return Verdict::Inconclusive;
  }
  if (distance_to_boundary(cone, fit.center) <= slack) {
    const Eigen::VectorXd foot = project_to_boundary(cone, fit.center);
    const auto piece = flat_piece_at(cone, foot, Tolerances{.geometric = tol.surface_boundary});
    if (piece) {
      bool same_piece = !q.boundary.empty();
      for (const auto& b : q.boundary) {
        const auto pb = flat_piece_at(cone, q.position[b.index], Tolerances{.geometric = tol.surface_boundary});
        same_piece = same_piece && pb && *pb == *piece;
      }
      if (same_piece) return Verdict::BoundaryHalfSphereOnFlatPiece;
      diag.push_back("free boundary leaves the flat piece under the sphere center");
      return Verdict::Inconclusive;
    }
  }
  diag.push_back("sphere center is neither the vertex nor on a flat wall piece");
  return Verdict::Inconclusive;
}

}  // namespace

IndexFormReport analyze(const DiscreteHypersurface& surface, const Tolerances& tol) {
  const auto q = quantities(surface, tol);
  IndexFormReport r;
  r.representation = to_string(surface.representation());
  r.vertex_count = surface.vertex_count();
  r.max_element_size = max_element_size(surface);
  r.area = q.area;
  r.consistency_tolerance = 1e-3 * q.area;
  r.mean_curvature = mean_curvature(q);
  r.curvature_spread = curvature_spread(q);
  r.contact_angle_residual = contact_angle_residual(q);
  const auto u = test_function(q);
  const auto Q = index_form(surface, q, u, tol);
  r.Q_direct = Q.direct;
  r.Q_gradient_form = Q.gradient_form;
  r.Q_closed = index_form_closed(surface, q, tol);
  r.umbilicity_defect = umbilicity_integral(q);
  const auto mk = minkowski_checks(surface, q, tol);
  r.minkowski1_residual = mk.first;
  r.minkowski2_residual = mk.second;
  for (double v : boundary_normal_curvatures(surface, q, tol)) r.max_boundary_II = std::max(r.max_boundary_II, std::abs(v));
  if (r.contact_angle_residual <= tol.stationarity) {
    r.boundary_identity_residual = boundary_identity(surface, q, tol);
    r.boundary_identity_evaluated = true;
  } else {
    r.diagnostics.push_back("boundary identity skipped: contact is not orthogonal");
  }

  // dimensionless versions for the decision tree
  const int n = q.n;
  const double scale = std::pow(q.area, (2.0 - n) / n);
  const double q_closed_hat = r.Q_closed * scale;
  const double defect_hat = r.umbilicity_defect * scale;

  if (r.contact_angle_residual > tol.stationarity) {
    r.diagnostics.push_back("contact residual " + format_double(r.contact_angle_residual) + " above threshold");
    r.verdict = Verdict::NotStationary;
    return r;
  }
  const bool convex = is_convex(surface.cone());
  // The instability test runs before the constant-curvature gate so that
  // non-umbilical closed surfaces (ellipsoids) are reported as unstable.
  if (convex && q_closed_hat < -tol.umbilicity) {
    r.verdict = Verdict::NotStable;
    return r;
  }
  if (!(r.curvature_spread <= tol.stationarity)) {
    r.diagnostics.push_back("curvature spread " + format_double(r.curvature_spread) + " above threshold");
    r.verdict = Verdict::NotStationary;
    return r;
  }
  if (!convex) {
    r.diagnostics.push_back("cone is not convex: stability conclusions do not apply");
    r.verdict = Verdict::Inconclusive;
    return r;
  }
  if (defect_hat > tol.umbilicity || r.max_boundary_II > tol.umbilicity * std::abs(r.mean_curvature)) {
    r.diagnostics.push_back("surface is not umbilical with vanishing II(N, N) on contact");
    r.verdict = Verdict::Inconclusive;
    return r;
  }
  r.verdict = sphere_verdict(surface, q, tol, r.diagnostics);
  return r;
}

Verdict classify(const DiscreteHypersurface& surface, const Tolerances& tol) { return analyze(surface, tol).verdict; }

json to_json(const IndexFormReport& r) {
  json j;
  j["Q_direct"] = r.Q_direct;
  j["Q_gradient_form"] = r.Q_gradient_form;
  j["Q_closed"] = r.Q_closed;
  j["minkowski1_residual"] = r.minkowski1_residual;
  j["minkowski2_residual"] = r.minkowski2_residual;
  j["boundary_identity_residual"] = r.boundary_identity_evaluated ? json(r.boundary_identity_residual) : json(nullptr);
  j["umbilicity_defect"] = r.umbilicity_defect;
  j["mean_curvature"] = r.mean_curvature;
  j["curvature_spread"] = r.curvature_spread;
  j["contact_angle_residual"] = r.contact_angle_residual;
  j["max_boundary_II"] = r.max_boundary_II;
  j["area"] = r.area;
  j["consistency_tolerance"] = r.consistency_tolerance;
  j["verdict"] = to_string(r.verdict);
  j["diagnostics"] = r.diagnostics;
  j["resolution"] = {{"representation", r.representation},
                     {"vertex_count", r.vertex_count},
                     {"max_element_size", r.max_element_size}};
  return j;
}

std::string render_table(const IndexFormReport& r) {
  std::ostringstream out;
  auto row = [&out](const std::string& name, const std::string& value) {
    out << name << std::string(name.size() < 28 ? 28 - name.size() : 1, ' ') << value << '\n';
  };
  row("representation", r.representation);
  row("vertices", std::to_string(r.vertex_count));
  row("max element size", format_double(r.max_element_size));
  row("area", format_double(r.area));
  row("mean curvature", format_double(r.mean_curvature));
  row("curvature spread", format_double(r.curvature_spread));
  row("contact angle residual", format_double(r.contact_angle_residual));
  row("Q direct", format_double(r.Q_direct));
  row("Q gradient form", format_double(r.Q_gradient_form));
  row("Q closed", format_double(r.Q_closed));
  row("umbilicity defect", format_double(r.umbilicity_defect));
  row("minkowski1 residual", format_double(r.minkowski1_residual));
  row("minkowski2 residual", format_double(r.minkowski2_residual));
  row("boundary identity residual",
      r.boundary_identity_evaluated ? format_double(r.boundary_identity_residual) : std::string("n/a"));
  row("max |II(N,N)| on contact", format_double(r.max_boundary_II));
  row("verdict", to_string(r.verdict));
  for (const auto& d : r.diagnostics) row("note", d);
  return out.str();
}

ProfileDerivativeResiduals profile_derivative_checks(const ConeSpec& cone, double r, double dr,
                                                     const CandidateFamily& family) {
  if (!(r > 0) || !(dr > 0) || dr >= r) throw ValidationError("need 0 < dr < r");
  const CandidateFamily fam = family ? family : [&cone](double radius) { return vertex_ball(cone, radius); };
  const int n = cone.n();
  const auto lo = fam(r - dr), mid = fam(r), hi = fam(r + dr);
  if (!(lo.volume < mid.volume && mid.volume < hi.volume)) {
    throw ValidationError("candidate family volume is not increasing in r");
  }
  ProfileDerivativeResiduals out;
  out.dPdV = (hi.perimeter - lo.perimeter) / (hi.volume - lo.volume);
  out.expected_dPdV = n / r;
  out.dPdV_residual = std::abs(out.dPdV - out.expected_dPdV);

  // radius with a given volume, by bisection on the monotone family
  auto radius_for = [&](double volume) {
    double a = r / 2, b = 2 * r;
    while (fam(a).volume > volume) a /= 2;
    while (fam(b).volume < volume) b *= 2;
    for (int it = 0; it < 200 && b - a > 1e-15 * b; ++it) {
      const double m = 0.5 * (a + b);
      (fam(m).volume < volume ? a : b) = m;
    }
    return 0.5 * (a + b);
  };
  const double p = (n + 1.0) / n;
  const double V = mid.volume;
  const double h = 1e-2 * V;
  auto G = [&](double volume) { return std::pow(fam(radius_for(volume)).perimeter, p); };
  out.second_derivative = (G(V + h) - 2 * G(V) + G(V - h)) / (h * h);
  out.convexity_residual = std::abs(out.second_derivative);
  return out;
}

}  // namespace coneiso
