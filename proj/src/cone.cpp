#include "coneiso/cone.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <string>

#include "coneiso/errors.hpp"

namespace coneiso {

namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double scale_of(const VecRef& x) { return std::max(1.0, x.norm()); }

Eigen::VectorXd axis(int dim) { return Eigen::VectorXd::Unit(dim, dim - 1); }

// Angle between x and the last coordinate axis.
double polar_angle(const VecRef& x) {
  const double along = x(x.size() - 1);
  const double perp = x.head(x.size() - 1).norm();
  return std::atan2(perp, along);
}

// Angle of a planar point in [0, 2 pi).
double planar_angle(const VecRef& x) {
  double phi = std::atan2(x(1), x(0));
  if (phi < 0) phi += 2 * kPi;
  return phi;
}

double distance_to_ray(const VecRef& x, const Eigen::Vector2d& dir) {
  const double t = x.dot(dir);
  if (t <= 0) return x.norm();
  return (x - t * dir).norm();
}

Eigen::Vector2d ray_direction(double angle) { return {std::cos(angle), std::sin(angle)}; }

// Inward wall normals of a sector: ray 0 and ray theta.
Eigen::Vector2d sector_normal(double theta, int piece) {
  if (piece == 0) return {0.0, 1.0};
  return {std::sin(theta), -std::cos(theta)};
}

int normals_rank(const std::vector<Eigen::VectorXd>& normals) {
  Eigen::MatrixXd stacked(normals.size(), normals.front().size());
  for (std::size_t k = 0; k < normals.size(); ++k) stacked.row(k) = normals[k].transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked);
  const auto& s = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > 1e-9 * s(0)) ++rank;
  }
  return rank;
}

double min_clearance(const std::vector<Eigen::VectorXd>& normals, const Eigen::VectorXd& m) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& nk : normals) best = std::min(best, nk.dot(m));
  return best;
}

// Direction maximizing min_k <n_k, m> over the unit sphere: seeded by a
// deterministic sample set and polished by projected subgradient ascent.
Eigen::VectorXd chebyshev_direction(const std::vector<Eigen::VectorXd>& normals) {
  const int dim = static_cast<int>(normals.front().size());
  std::vector<Eigen::VectorXd> seeds;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  for (const auto& nk : normals) {
    seeds.push_back(nk);
    sum += nk;
  }
  if (sum.norm() > 0) seeds.push_back(sum.normalized());
  if (dim == 2) {
    for (int i = 0; i < 720; ++i) {
      const double phi = 2 * kPi * i / 720.0;
      seeds.push_back(Eigen::Vector2d(std::cos(phi), std::sin(phi)));
    }
  } else {
    const int count = 4000;
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
      const double z = 1.0 - 2.0 * (i + 0.5) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      Eigen::VectorXd v(3);
      v << r * std::cos(golden * i), r * std::sin(golden * i), z;
      seeds.push_back(v);
    }
  }
  Eigen::VectorXd best = seeds.front();
  double best_val = min_clearance(normals, best);
  for (const auto& s : seeds) {
    const double v = min_clearance(normals, s);
    if (v > best_val) {
      best_val = v;
      best = s;
    }
  }
  Eigen::VectorXd m = best;
  double step = 0.05;
  for (int it = 0; it < 2000; ++it) {
    // Average the active normals for a subgradient.
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    const double val = min_clearance(normals, m);
    for (const auto& nk : normals) {
      if (nk.dot(m) <= val + 1e-12) g += nk;
    }
    g -= g.dot(m) * m;
    if (g.norm() < 1e-15) break;
    Eigen::VectorXd trial = (m + step * g.normalized()).normalized();
    if (min_clearance(normals, trial) > val) {
      m = trial;
    } else {
      step *= 0.5;
      if (step < 1e-14) break;
    }
  }
  return m;
}

// Euclidean projection onto the polyhedral cone by Dykstra's alternating
// projections.
Eigen::VectorXd project_onto_polyhedral(const std::vector<Eigen::VectorXd>& normals,
                                        const VecRef& x) {
  const std::size_t k = normals.size();
  Eigen::VectorXd y = x;
  std::vector<Eigen::VectorXd> increments(k, Eigen::VectorXd::Zero(x.size()));
  for (int sweep = 0; sweep < 10000; ++sweep) {
    Eigen::VectorXd before = y;
    for (std::size_t i = 0; i < k; ++i) {
      Eigen::VectorXd z = y + increments[i];
      const double d = normals[i].dot(z);
      Eigen::VectorXd projected = d < 0 ? Eigen::VectorXd(z - d * normals[i]) : z;
      increments[i] = z - projected;
      y = projected;
    }
    if ((y - before).norm() <= 1e-15 * scale_of(x)) break;
  }
  return y;
}

// Signed angle of unit vector d relative to the interior direction m in the
// plane, positive counterclockwise.
double relative_angle(const Eigen::Vector2d& m, const Eigen::Vector2d& d) {
  return std::atan2(m.x() * d.y() - m.y() * d.x(), m.dot(d));
}

double polyhedral_angle_2d(const std::vector<Eigen::VectorXd>& normals, const Eigen::Vector2d& m) {
  // Each half-plane <n, x> >= 0 is an arc of length pi centered on n.
  double lo = -kPi;
  double hi = kPi;
  for (const auto& nk : normals) {
    const double center = relative_angle(m, Eigen::Vector2d(nk(0), nk(1)));
    lo = std::max(lo, center - kPi / 2);
    hi = std::min(hi, center + kPi / 2);
  }
  return hi - lo;
}

// Area of the spherical triangle (a, b, c) of unit vectors.
double spherical_triangle_area(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                               const Eigen::Vector3d& c) {
  const double triple = std::abs(a.dot(b.cross(c)));
  const double denom = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
  return 2.0 * std::atan2(triple, denom);
}

double polyhedral_solid_angle_3d(const std::vector<Eigen::VectorXd>& normals,
                                 const Eigen::VectorXd& interior) {
  const int rank = normals_rank(normals);
  if (rank == 1) return 2 * kPi;
  if (rank == 2) {
    // Cone = planar cone x line: the link is a lune of twice the planar angle.
    Eigen::Vector3d line = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < normals.size() && line.norm() < 1e-9; ++i) {
      for (std::size_t j = i + 1; j < normals.size(); ++j) {
        Eigen::Vector3d c = Eigen::Vector3d(normals[i]).cross(Eigen::Vector3d(normals[j]));
        if (c.norm() > 1e-9) {
          line = c.normalized();
          break;
        }
      }
    }
    Eigen::Vector3d e1 = Eigen::Vector3d(normals[0]).normalized();
    Eigen::Vector3d e2 = line.cross(e1);
    std::vector<Eigen::VectorXd> planar;
    for (const auto& nk : normals) planar.push_back(Eigen::Vector2d(nk.dot(e1), nk.dot(e2)).normalized());
    Eigen::Vector3d m3 = interior - interior.dot(line) * line;
    Eigen::Vector2d m(m3.dot(e1), m3.dot(e2));
    return 2.0 * polyhedral_angle_2d(planar, m.normalized());
  }
  // Pointed cone: extreme rays are the vertices of a convex spherical polygon.
  const Eigen::Vector3d m = Eigen::Vector3d(interior).normalized();
  std::vector<Eigen::Vector3d> rays;
  for (std::size_t i = 0; i < normals.size(); ++i) {
    for (std::size_t j = i + 1; j < normals.size(); ++j) {
      Eigen::Vector3d c = Eigen::Vector3d(normals[i]).cross(Eigen::Vector3d(normals[j]));
      if (c.norm() < 1e-12) continue;
      c.normalize();
      for (double s : {1.0, -1.0}) {
        Eigen::Vector3d d = s * c;
        bool feasible = true;
        for (const auto& nk : normals) {
          if (nk.dot(d) < -1e-12) {
            feasible = false;
            break;
          }
        }
        if (!feasible) continue;
        bool duplicate = std::any_of(rays.begin(), rays.end(),
                                     [&](const Eigen::Vector3d& r) { return (r - d).norm() < 1e-9; });
        if (!duplicate) rays.push_back(d);
      }
    }
  }
  if (rays.size() < 3) throw NumericalError("polyhedral cone: could not resolve extreme rays");
  Eigen::Vector3d e1 = (std::abs(m.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY());
  e1 = (e1 - e1.dot(m) * m).normalized();
  const Eigen::Vector3d e2 = m.cross(e1);
  std::sort(rays.begin(), rays.end(), [&](const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    return std::atan2(a.dot(e2), a.dot(e1)) < std::atan2(b.dot(e2), b.dot(e1));
  });
  double area = 0.0;
  for (std::size_t i = 0; i < rays.size(); ++i) {
    area += spherical_triangle_area(m, rays[i], rays[(i + 1) % rays.size()]);
  }
  return area;
}

// integral_0^alpha sin^k(t) dt by the standard reduction formula.
double sine_power_integral(int k, double alpha) {
  if (k == 0) return alpha;
  if (k == 1) return 1.0 - std::cos(alpha);
  return -std::pow(std::sin(alpha), k - 1) * std::cos(alpha) / k +
         (k - 1.0) / k * sine_power_integral(k - 2, alpha);
}

// Index of the polyhedral facets active at x.
std::vector<int> active_facets(const Polyhedral& poly, const VecRef& x, double tol) {
  std::vector<int> active;
  for (std::size_t k = 0; k < poly.normals.size(); ++k) {
    if (std::abs(poly.normals[k].dot(x)) <= tol) active.push_back(static_cast<int>(k));
  }
  return active;
}

}  // namespace

ConeSpec ConeSpec::sector(double theta) {
  if (!(theta > 0 && theta < 2 * kPi)) {
    throw ValidationError("sector angle theta must lie in (0, 2pi), got " + std::to_string(theta));
  }
  return ConeSpec(2, Sector{theta}, ray_direction(theta / 2));
}

ConeSpec ConeSpec::circular(double alpha, int ambient_dim) {
  if (!(alpha > 0 && alpha < kPi)) {
    throw ValidationError("circular half-angle alpha must lie in (0, pi), got " + std::to_string(alpha));
  }
  if (ambient_dim < 3) {
    throw ValidationError("circular cones need ambient dimension >= 3 (use a sector in the plane)");
  }
  return ConeSpec(ambient_dim, Circular{alpha}, axis(ambient_dim));
}

ConeSpec ConeSpec::half_space(int ambient_dim) {
  if (ambient_dim < 2) throw ValidationError("half-space needs ambient dimension >= 2");
  return ConeSpec(ambient_dim, HalfSpace{}, axis(ambient_dim));
}

ConeSpec ConeSpec::polyhedral(std::vector<Eigen::VectorXd> normals, const Tolerances& tol) {
  if (normals.empty()) throw ValidationError("polyhedral cone needs at least one normal");
  const auto dim = normals.front().size();
  if (dim != 2 && dim != 3) throw ValidationError("polyhedral cones are supported in dimension 2 and 3");
  for (auto& nk : normals) {
    if (nk.size() != dim) throw ValidationError("polyhedral normals must share one dimension");
    if (std::abs(nk.norm() - 1.0) > tol.unit_length) {
      throw ValidationError("polyhedral normals must have unit length");
    }
    nk.normalize();
  }
  Eigen::VectorXd m = chebyshev_direction(normals);
  if (min_clearance(normals, m) <= 1e-9) {
    throw ValidationError("polyhedral cone has empty interior");
  }
  return ConeSpec(static_cast<int>(dim), Polyhedral{std::move(normals)}, std::move(m));
}

bool ConeSpec::operator==(const ConeSpec& other) const {
  if (ambient_dim_ != other.ambient_dim_ || shape_.index() != other.shape_.index()) return false;
  return std::visit(
      overloaded{
          [&](const Sector& s) { return s.theta == std::get<Sector>(other.shape_).theta; },
          [&](const Circular& c) { return c.alpha == std::get<Circular>(other.shape_).alpha; },
          [&](const HalfSpace&) { return true; },
          [&](const Polyhedral& p) {
            const auto& q = std::get<Polyhedral>(other.shape_);
            if (p.normals.size() != q.normals.size()) return false;
            for (std::size_t k = 0; k < p.normals.size(); ++k) {
              if (p.normals[k] != q.normals[k]) return false;
            }
            return true;
          }},
      shape_);
}

double sphere_measure(int n) {
  if (n < 0) throw ValidationError("sphere dimension must be nonnegative");
  return 2.0 * std::pow(kPi, (n + 1) / 2.0) / std::tgamma((n + 1) / 2.0);
}

SolidAngleEstimate solid_angle_estimate(const ConeSpec& cone) {
  const int n = cone.n();
  return std::visit(
      overloaded{
          [&](const Sector& s) { return SolidAngleEstimate{s.theta, 0.0}; },
          [&](const Circular& c) {
            const double value = sphere_measure(n - 1) * sine_power_integral(n - 1, c.alpha);
            return SolidAngleEstimate{value, 1e-14 * value};
          },
          [&](const HalfSpace&) { return SolidAngleEstimate{sphere_measure(n) / 2, 0.0}; },
          [&](const Polyhedral& p) {
            double value = 0;
            if (cone.ambient_dim() == 2) {
              Eigen::Vector2d m(cone.interior_direction()(0), cone.interior_direction()(1));
              value = polyhedral_angle_2d(p.normals, m);
            } else {
              value = polyhedral_solid_angle_3d(p.normals, cone.interior_direction());
            }
            return SolidAngleEstimate{value, 1e-12 * value};
          }},
      cone.shape());
}

double solid_angle(const ConeSpec& cone) { return solid_angle_estimate(cone).value; }

bool is_convex(const ConeSpec& cone) {
  return std::visit(overloaded{[](const Sector& s) { return s.theta <= kPi; },
                               [](const Circular& c) { return c.alpha <= kPi / 2; },
                               [](const HalfSpace&) { return true; },
                               [](const Polyhedral&) { return true; }},
                    cone.shape());
}

bool contains(const ConeSpec& cone, const VecRef& x, const Tolerances& tol) {
  if (x.size() != cone.ambient_dim()) throw ValidationError("point dimension does not match cone");
  const double eps = tol.geometric * scale_of(x);
  if (x.norm() <= eps) return true;
  return std::visit(
      overloaded{
          [&](const Sector& s) {
            if (planar_angle(x) <= s.theta) return true;
            return distance_to_boundary(cone, x) <= eps;
          },
          [&](const Circular& c) {
            if (polar_angle(x) <= c.alpha) return true;
            return distance_to_boundary(cone, x) <= eps;
          },
          [&](const HalfSpace&) { return x(x.size() - 1) >= -eps; },
          [&](const Polyhedral& p) {
            return std::all_of(p.normals.begin(), p.normals.end(),
                               [&](const Eigen::VectorXd& nk) { return nk.dot(x) >= -eps; });
          }},
      cone.shape());
}

double distance_to_boundary(const ConeSpec& cone, const VecRef& x) {
  if (x.size() != cone.ambient_dim()) throw ValidationError("point dimension does not match cone");
  const double r = x.norm();
  if (r == 0) return 0;
  return std::visit(
      overloaded{
          [&](const Sector& s) {
            return std::min(distance_to_ray(x, ray_direction(0)), distance_to_ray(x, ray_direction(s.theta)));
          },
          [&](const Circular& c) {
            const double delta = std::abs(polar_angle(x) - c.alpha);
            return delta <= kPi / 2 ? r * std::sin(delta) : r;
          },
          [&](const HalfSpace&) { return std::abs(x(x.size() - 1)); },
          [&](const Polyhedral& p) {
            const double clearance = min_clearance(p.normals, x);
            if (clearance >= 0) return clearance;
            return (x - project_onto_polyhedral(p.normals, x)).norm();
          }},
      cone.shape());
}

Eigen::VectorXd project_to_boundary(const ConeSpec& cone, const VecRef& x) {
  if (x.size() != cone.ambient_dim()) throw ValidationError("point dimension does not match cone");
  return std::visit(
      overloaded{
          [&](const Sector& s) -> Eigen::VectorXd {
            Eigen::VectorXd best;
            double best_d = std::numeric_limits<double>::infinity();
            for (double angle : {0.0, s.theta}) {
              const Eigen::Vector2d d = ray_direction(angle);
              const Eigen::VectorXd q = std::max(0.0, x.dot(d)) * d;
              const double dist = (x - q).norm();
              if (dist < best_d) {
                best_d = dist;
                best = q;
              }
            }
            return best;
          },
          [&](const Circular& c) -> Eigen::VectorXd {
            const int dim = cone.ambient_dim();
            Eigen::VectorXd perp = x;
            perp(dim - 1) = 0;
            Eigen::VectorXd azimuth = perp.norm() > 0 ? Eigen::VectorXd(perp.normalized())
                                                      : Eigen::VectorXd(Eigen::VectorXd::Unit(dim, 0));
            Eigen::VectorXd ruling = std::sin(c.alpha) * azimuth + std::cos(c.alpha) * axis(dim);
            return std::max(0.0, x.dot(ruling)) * ruling;
          },
          [&](const HalfSpace&) -> Eigen::VectorXd {
            Eigen::VectorXd q = x;
            q(q.size() - 1) = 0;
            return q;
          },
          [&](const Polyhedral& p) -> Eigen::VectorXd {
            // Closest facet: project onto its hyperplane, then back into the cone.
            Eigen::VectorXd best;
            double best_d = std::numeric_limits<double>::infinity();
            for (const auto& nk : p.normals) {
              Eigen::VectorXd q = x - nk.dot(x) * nk;
              q = project_onto_polyhedral(p.normals, q);
              const double dist = (x - q).norm();
              if (dist < best_d) {
                best_d = dist;
                best = q;
              }
            }
            return best;
          }},
      cone.shape());
}

BoundaryPoint boundary_point(const ConeSpec& cone, const VecRef& x, const Tolerances& tol) {
  if (x.size() != cone.ambient_dim()) throw ValidationError("point dimension does not match cone");
  const double eps = tol.surface_boundary * scale_of(x);
  if (x.norm() <= eps) {
    throw ValidationError("the cone vertex is excluded from the wall (II and nu* undefined at 0)");
  }
  if (distance_to_boundary(cone, x) > eps || !contains(cone, x, Tolerances{.geometric = tol.surface_boundary})) {
    throw ValidationError("point is not on the cone wall");
  }
  Eigen::VectorXd nu = std::visit(
      overloaded{
          [&](const Sector& s) -> Eigen::VectorXd {
            const int piece = distance_to_ray(x, ray_direction(0)) <= distance_to_ray(x, ray_direction(s.theta)) ? 0 : 1;
            return sector_normal(s.theta, piece);
          },
          [&](const Circular& c) -> Eigen::VectorXd {
            const Eigen::VectorXd radial = x.normalized();
            const Eigen::VectorXd a = axis(cone.ambient_dim());
            Eigen::VectorXd nu = a - std::cos(c.alpha) * radial;
            return nu / std::sin(c.alpha);
          },
          [&](const HalfSpace&) -> Eigen::VectorXd { return axis(cone.ambient_dim()); },
          [&](const Polyhedral& p) -> Eigen::VectorXd {
            auto active = active_facets(p, x, eps);
            if (active.size() != 1) {
              throw ValidationError("point lies on a polyhedral edge; the wall normal is not defined there");
            }
            return p.normals[active.front()];
          }},
      cone.shape());
  return BoundaryPoint{Eigen::VectorXd(x), std::move(nu)};
}

double boundary_II_form(const ConeSpec& cone, const BoundaryPoint& p, const VecRef& v) {
  const double r = p.position.norm();
  if (r == 0) throw ValidationError("II is undefined at the cone vertex");
  return std::visit(overloaded{[&](const Circular& c) {
                                 const Eigen::VectorXd radial = p.position / r;
                                 const double along = v.dot(radial);
                                 return (v.squaredNorm() - along * along) / (std::tan(c.alpha) * r);
                               },
                               [](const auto&) { return 0.0; }},
                    cone.shape());
}

double boundary_II(const ConeSpec& cone, const BoundaryPoint& p, const VecRef& v, const Tolerances& tol) {
  if (v.size() != cone.ambient_dim()) throw ValidationError("tangent vector dimension does not match cone");
  if (std::abs(v.norm() - 1.0) > tol.unit_length) throw ValidationError("II expects a unit tangent vector");
  if (std::abs(v.dot(p.inward_normal)) > tol.unit_length) {
    throw ValidationError("vector is not tangent to the cone wall");
  }
  return boundary_II_form(cone, p, v);
}

std::optional<int> flat_piece_at(const ConeSpec& cone, const VecRef& x, const Tolerances& tol) {
  const double eps = tol.surface_boundary * scale_of(x);
  if (distance_to_boundary(cone, x) > eps) return std::nullopt;
  return std::visit(
      overloaded{
          [&](const Sector& s) -> std::optional<int> {
            if (distance_to_ray(x, ray_direction(0)) <= eps) return 0;
            if (distance_to_ray(x, ray_direction(s.theta)) <= eps) return 1;
            return std::nullopt;
          },
          [&](const Circular& c) -> std::optional<int> {
            if (std::abs(c.alpha - kPi / 2) <= tol.geometric) return 0;
            return std::nullopt;
          },
          [&](const HalfSpace&) -> std::optional<int> { return 0; },
          [&](const Polyhedral& p) -> std::optional<int> {
            auto active = active_facets(p, x, eps);
            if (active.size() != 1) return std::nullopt;
            return active.front();
          }},
      cone.shape());
}

bool has_flat_boundary(const ConeSpec& cone) {
  if (const auto* c = std::get_if<Circular>(&cone.shape())) return std::abs(c->alpha - kPi / 2) <= 1e-12;
  return true;
}

bool is_half_space(const ConeSpec& cone, const Tolerances& tol) {
  return std::visit(overloaded{[&](const Sector& s) { return std::abs(s.theta - kPi) <= tol.geometric; },
                               [&](const Circular& c) { return std::abs(c.alpha - kPi / 2) <= tol.geometric; },
                               [](const HalfSpace&) { return true; },
                               [](const Polyhedral& p) { return normals_rank(p.normals) == 1; }},
                    cone.shape());
}

}  // namespace coneiso
