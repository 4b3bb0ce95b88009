#include "coneiso/surface.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "coneiso/errors.hpp"

namespace coneiso {

namespace {

constexpr double kPi = std::numbers::pi;

using V2 = Eigen::Vector2d;
using V3 = Eigen::Vector3d;

double cross2(const V2& a, const V2& b) { return a.x() * b.y() - a.y() * b.x(); }
V2 rot90(const V2& v) { return {-v.y(), v.x()}; }

Eigen::VectorXd embed_meridian(const V2& rz) {
  Eigen::VectorXd x(3);
  x << rz.x(), 0.0, rz.y();
  return x;
}

// Oriented circle through a -> b -> c. Signed curvature is positive for a
// left turn; normals are the left normals of the circle at each point.
struct Circle3 {
  double kappa = 0;
  bool collinear = true;
  V2 center = V2::Zero();
  std::array<V2, 3> normal;
};

Circle3 circle_through(const V2& a, const V2& b, const V2& c) {
  const V2 u = b - a;
  const V2 v = c - a;
  const V2 w = c - b;
  const double lu = u.norm(), lv = v.norm(), lw = w.norm();
  if (lu == 0 || lw == 0 || lv == 0) throw ValidationError("zero-length element in discrete curve");
  Circle3 out;
  const double cr = cross2(u, v);
  out.kappa = 2 * cr / (lu * lv * lw);
  if (std::abs(out.kappa) * std::max(lu, lw) < 1e-12) {
    out.kappa = 0;
    const V2 nrm = rot90(v / lv);
    out.normal = {nrm, nrm, nrm};
    return out;
  }
  out.collinear = false;
  const double d = 2 * cr;
  const double uu = u.squaredNorm(), vv = v.squaredNorm();
  out.center = a + V2((v.y() * uu - u.y() * vv) / d, (u.x() * vv - v.x() * uu) / d);
  const double sign = out.kappa > 0 ? 1.0 : -1.0;
  const std::array<V2, 3> pts{a, b, c};
  for (int k = 0; k < 3; ++k) out.normal[k] = sign * (out.center - pts[k]).normalized();
  return out;
}

// Curvature and normal at an axis endpoint of a meridian: least-squares circle
// centered on the axis through up to eight off-axis vertices.
std::pair<double, V2> axis_curvature(const std::vector<V2>& p, bool first) {
  const std::size_t nv = p.size();
  const std::size_t k = std::min<std::size_t>(8, nv - 1);
  Eigen::MatrixXd A(k, 2);
  Eigen::VectorXd b(k);
  double zmin = std::numeric_limits<double>::infinity(), zmax = -zmin, rmax = 0;
  for (std::size_t j = 0; j < k; ++j) {
    const V2& q = p[first ? j + 1 : nv - 2 - j];
    A(j, 0) = q.y();
    A(j, 1) = 1.0;
    b(j) = q.squaredNorm();
    zmin = std::min(zmin, q.y());
    zmax = std::max(zmax, q.y());
    rmax = std::max(rmax, q.x());
  }
  const V2 t = first ? V2(1.0, 0.0) : V2(-1.0, 0.0);
  const V2 normal = rot90(t);
  if (k < 2 || zmax - zmin <= 1e-12 * rmax) return {0.0, normal};
  const Eigen::Vector2d sol = A.colPivHouseholderQr().solve(b);
  const double zc = 0.5 * sol(0);
  const double R = std::sqrt(std::max(0.0, sol(1) + zc * zc));
  if (!(R > 0)) return {0.0, normal};
  const double z0 = p[first ? 0 : nv - 1].y();
  const double top = std::abs(zc + R - z0) < std::abs(zc - R - z0) ? zc + R : zc - R;
  return {((zc - top) * normal.y() > 0 ? 1.0 : -1.0) / R, normal};
}

// Point at fraction f along the short arc from p to q on a circle.
V2 arc_point(const V2& center, const V2& p, const V2& q, double f) {
  const V2 dp = p - center, dq = q - center;
  const double r = 0.5 * (dp.norm() + dq.norm());
  const double ta = std::atan2(dp.y(), dp.x());
  double delta = std::atan2(dq.y(), dq.x()) - ta;
  while (delta > kPi) delta -= 2 * kPi;
  while (delta <= -kPi) delta += 2 * kPi;
  const double t = ta + f * delta;
  return center + r * V2(std::cos(t), std::sin(t));
}

bool segments_cross(const V2& a, const V2& b, const V2& c, const V2& d) {
  auto orient = [](const V2& p, const V2& q, const V2& r) { return cross2(q - p, r - p); };
  const double d1 = orient(c, d, a), d2 = orient(c, d, b);
  const double d3 = orient(a, b, c), d4 = orient(a, b, d);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

// Segment [p, q] against triangle (a, b, c), excluding touching contacts.
bool segment_hits_triangle(const V3& p, const V3& q, const V3& a, const V3& b, const V3& c) {
  const V3 dir = q - p;
  const V3 e1 = b - a, e2 = c - a;
  const V3 h = dir.cross(e2);
  const double det = e1.dot(h);
  if (std::abs(det) < 1e-14 * e1.norm() * e2.norm() * dir.norm()) return false;
  const V3 s = p - a;
  const double u = s.dot(h) / det;
  const V3 qv = s.cross(e1);
  const double v = dir.dot(qv) / det;
  const double t = e2.dot(qv) / det;
  constexpr double eps = 1e-10;
  return u > eps && v > eps && u + v < 1 - eps && t > eps && t < 1 - eps;
}

struct MeshTopology {
  std::vector<std::vector<int>> vertex_triangles;
  std::vector<std::set<int>> neighbors;
  std::map<std::pair<int, int>, int> edge_faces;  // sorted edge -> incident triangle count
  std::vector<std::vector<int>> boundary_neighbors;
  std::vector<bool> topological_boundary;
};

MeshTopology build_topology(std::size_t nv, const std::vector<std::array<int, 3>>& tris) {
  MeshTopology t;
  t.vertex_triangles.resize(nv);
  t.neighbors.resize(nv);
  t.boundary_neighbors.resize(nv);
  t.topological_boundary.assign(nv, false);
  for (std::size_t f = 0; f < tris.size(); ++f) {
    const auto& tri = tris[f];
    for (int k = 0; k < 3; ++k) {
      const int i = tri[k], j = tri[(k + 1) % 3];
      t.vertex_triangles[i].push_back(static_cast<int>(f));
      t.neighbors[i].insert(j);
      t.neighbors[j].insert(i);
      ++t.edge_faces[{std::min(i, j), std::max(i, j)}];
    }
  }
  for (const auto& [e, count] : t.edge_faces) {
    if (count == 1) {
      t.topological_boundary[e.first] = t.topological_boundary[e.second] = true;
      t.boundary_neighbors[e.first].push_back(e.second);
      t.boundary_neighbors[e.second].push_back(e.first);
    }
  }
  return t;
}

std::vector<int> k_ring(const MeshTopology& t, int i, int k) {
  std::set<int> ring{i};
  std::set<int> frontier{i};
  for (int step = 0; step < k; ++step) {
    std::set<int> next;
    for (int v : frontier) {
      for (int w : t.neighbors[v]) {
        if (ring.insert(w).second) next.insert(w);
      }
    }
    frontier = std::move(next);
  }
  ring.erase(i);
  return {ring.begin(), ring.end()};
}

std::vector<int> two_ring(const MeshTopology& t, int i) { return k_ring(t, i, 2); }

V3 tri_normal_raw(const V3& a, const V3& b, const V3& c) { return (b - a).cross(c - a); }

// Local quadric height fit h = d x + e y + a x^2 + b xy + c y^2 about vertex p
// in the frame (e1, e2, n).
struct QuadricFit {
  V3 normal;
  double k1 = 0, k2 = 0;
  Eigen::Matrix<double, 5, 1> coeff = Eigen::Matrix<double, 5, 1>::Zero();
  V3 e1, e2;
};

QuadricFit fit_quadric(const V3& p, const V3& n_ref, const std::vector<V3>& pts) {
  QuadricFit fit;
  V3 e1 = std::abs(n_ref.x()) < 0.9 ? V3::UnitX() : V3::UnitY();
  e1 = (e1 - e1.dot(n_ref) * n_ref).normalized();
  const V3 e2 = n_ref.cross(e1);
  fit.e1 = e1;
  fit.e2 = e2;
  const int m = static_cast<int>(pts.size());
  const bool with_linear = m >= 5;
  const int cols = with_linear ? 5 : 3;
  if (m < 3) {
    fit.normal = n_ref;
    return fit;
  }
  Eigen::MatrixXd A(m, cols);
  Eigen::VectorXd rhs(m);
  for (int r = 0; r < m; ++r) {
    const V3 d = pts[r] - p;
    const double x = d.dot(e1), y = d.dot(e2);
    if (with_linear) {
      A.row(r) << x, y, x * x, x * y, y * y;
    } else {
      A.row(r) << x * x, x * y, y * y;
    }
    rhs(r) = d.dot(n_ref);
  }
  Eigen::VectorXd sol = A.colPivHouseholderQr().solve(rhs);
  if (with_linear) {
    fit.coeff = sol;
  } else {
    fit.coeff << 0, 0, sol(0), sol(1), sol(2);
  }
  const double hx = fit.coeff(0), hy = fit.coeff(1);
  const double w = std::sqrt(1 + hx * hx + hy * hy);
  fit.normal = (n_ref - hx * e1 - hy * e2).normalized();
  Eigen::Matrix2d second;
  second << 2 * fit.coeff(2), fit.coeff(3), fit.coeff(3), 2 * fit.coeff(4);
  second /= w;
  Eigen::Matrix2d first;
  first << 1 + hx * hx, hx * hy, hx * hy, 1 + hy * hy;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix2d> es(second, first);
  fit.k1 = es.eigenvalues()(0);
  fit.k2 = es.eigenvalues()(1);
  return fit;
}

// Mixed Voronoi vertex areas.
std::vector<double> mesh_vertex_weights(const std::vector<V3>& x, const std::vector<std::array<int, 3>>& tris) {
  std::vector<double> w(x.size(), 0.0);
  for (const auto& t : tris) {
    const V3 &a = x[t[0]], &b = x[t[1]], &c = x[t[2]];
    const double area = 0.5 * tri_normal_raw(a, b, c).norm();
    if (area == 0) throw ValidationError("zero-area triangle in mesh");
    const std::array<V3, 3> p{a, b, c};
    std::array<double, 3> cot{};
    int obtuse = -1;
    for (int k = 0; k < 3; ++k) {
      const V3 u = p[(k + 1) % 3] - p[k], v = p[(k + 2) % 3] - p[k];
      cot[k] = u.dot(v) / u.cross(v).norm();
      if (u.dot(v) < 0) obtuse = k;
    }
    if (obtuse < 0) {
      for (int k = 0; k < 3; ++k) {
        const int i1 = (k + 1) % 3, i2 = (k + 2) % 3;
        // Voronoi share of corner k: edges k-i1 (opposite i2) and k-i2 (opposite i1).
        w[t[k]] += ((p[i1] - p[k]).squaredNorm() * cot[i2] + (p[i2] - p[k]).squaredNorm() * cot[i1]) / 8.0;
      }
    } else {
      for (int k = 0; k < 3; ++k) w[t[k]] += (k == obtuse ? area / 2 : area / 4);
    }
  }
  return w;
}

std::vector<V3> mesh_area_gradient(const std::vector<V3>& x, const std::vector<std::array<int, 3>>& tris) {
  std::vector<V3> g(x.size(), V3::Zero());
  for (const auto& t : tris) {
    const V3 &a = x[t[0]], &b = x[t[1]], &c = x[t[2]];
    const V3 raw = tri_normal_raw(a, b, c);
    const double len = raw.norm();
    if (len == 0) continue;
    const V3 nhat = raw / len;
    g[t[0]] += 0.5 * nhat.cross(c - b);
    g[t[1]] += 0.5 * nhat.cross(a - c);
    g[t[2]] += 0.5 * nhat.cross(b - a);
  }
  return g;
}

std::vector<V3> mesh_volume_gradient(const std::vector<V3>& x, const std::vector<std::array<int, 3>>& tris) {
  std::vector<V3> g(x.size(), V3::Zero());
  for (const auto& t : tris) {
    const V3 &a = x[t[0]], &b = x[t[1]], &c = x[t[2]];
    g[t[0]] -= b.cross(c) / 6.0;
    g[t[1]] -= c.cross(a) / 6.0;
    g[t[2]] -= a.cross(b) / 6.0;
  }
  return g;
}

double mesh_area(const std::vector<V3>& x, const std::vector<std::array<int, 3>>& tris) {
  double a = 0;
  for (const auto& t : tris) a += 0.5 * tri_normal_raw(x[t[0]], x[t[1]], x[t[2]]).norm();
  return a;
}

double mesh_signed_volume(const std::vector<V3>& x, const std::vector<std::array<int, 3>>& tris) {
  double v = 0;
  for (const auto& t : tris) v -= x[t[0]].dot(x[t[1]].cross(x[t[2]])) / 6.0;
  return v;
}

bool mesh_self_intersects(const std::vector<V3>& x, const std::vector<std::array<int, 3>>& tris) {
  struct Box {
    V3 lo, hi;
    int f;
  };
  std::vector<Box> boxes;
  boxes.reserve(tris.size());
  for (std::size_t f = 0; f < tris.size(); ++f) {
    const auto& t = tris[f];
    V3 lo = x[t[0]].cwiseMin(x[t[1]]).cwiseMin(x[t[2]]);
    V3 hi = x[t[0]].cwiseMax(x[t[1]]).cwiseMax(x[t[2]]);
    boxes.push_back({lo, hi, static_cast<int>(f)});
  }
  std::sort(boxes.begin(), boxes.end(), [](const Box& a, const Box& b) { return a.lo.x() < b.lo.x(); });
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < boxes.size() && boxes[j].lo.x() <= boxes[i].hi.x(); ++j) {
      const Box &A = boxes[i], &B = boxes[j];
      if ((A.lo.array() > B.hi.array()).any() || (B.lo.array() > A.hi.array()).any()) continue;
      const auto& ta = tris[A.f];
      const auto& tb = tris[B.f];
      bool shares = false;
      for (int u : ta)
        for (int v : tb) shares = shares || u == v;
      if (shares) continue;
      for (int k = 0; k < 3; ++k) {
        if (segment_hits_triangle(x[ta[k]], x[ta[(k + 1) % 3]], x[tb[0]], x[tb[1]], x[tb[2]]) ||
            segment_hits_triangle(x[tb[k]], x[tb[(k + 1) % 3]], x[ta[0]], x[ta[1]], x[ta[2]])) {
          return true;
        }
      }
    }
  }
  return false;
}

double derivative_at_first_node(std::span<const double> s, std::span<const double> f) {
  // d/ds of the Lagrange interpolant through (s_j, f_j), evaluated at s_0.
  const std::size_t m = s.size();
  double result = 0;
  for (std::size_t j = 0; j < m; ++j) {
    double lj = 0;
    if (j == 0) {
      for (std::size_t k = 1; k < m; ++k) lj += 1.0 / (s[0] - s[k]);
    } else {
      double num = 1, den = 1;
      for (std::size_t k = 0; k < m; ++k) {
        if (k == j) continue;
        den *= s[j] - s[k];
        if (k != 0) num *= s[0] - s[k];
      }
      lj = num / den;
    }
    result += lj * f[j];
  }
  return result;
}

bool cone_supports_meridian(const ConeSpec& cone) {
  if (cone.ambient_dim() != 3) return false;
  return std::holds_alternative<Circular>(cone.shape()) || std::holds_alternative<HalfSpace>(cone.shape());
}

}  // namespace

std::string to_string(Representation r) {
  switch (r) {
    case Representation::Polyline:
      return "polyline";
    case Representation::Axisymmetric:
      return "axisymmetric";
    case Representation::TriangleMesh:
      return "mesh";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Curve functionals

std::vector<double> curve_vertex_weights(std::span<const V2> pts, bool meridian, bool closed) {
  const std::size_t n = pts.size();
  std::vector<double> w(n, 0.0);
  const std::size_t segs = closed ? n : n - 1;
  for (std::size_t s = 0; s < segs; ++s) {
    const std::size_t i = s, j = (s + 1) % n;
    const double l = (pts[j] - pts[i]).norm();
    if (meridian) {
      w[i] += kPi * l * (2 * pts[i].x() + pts[j].x()) / 3.0;
      w[j] += kPi * l * (pts[i].x() + 2 * pts[j].x()) / 3.0;
    } else {
      w[i] += 0.5 * l;
      w[j] += 0.5 * l;
    }
  }
  return w;
}

CurveFunctionals curve_functionals(std::span<const V2> pts, bool meridian, bool closed, bool with_gradients) {
  CurveFunctionals out;
  const std::size_t n = pts.size();
  if (with_gradients) {
    out.area_gradient.assign(n, V2::Zero());
    out.volume_gradient.assign(n, V2::Zero());
  }
  const std::size_t segs = closed ? n : n - 1;
  for (std::size_t s = 0; s < segs; ++s) {
    const std::size_t i = s, j = (s + 1) % n;
    const V2 &a = pts[i], &b = pts[j];
    const double l = (b - a).norm();
    const double cr = cross2(a, b);
    if (meridian) {
      const double sr = a.x() + b.x();
      out.area += kPi * sr * l;
      out.volume += kPi / 3.0 * cr * sr;
      if (with_gradients) {
        if (l > 0) {
          out.area_gradient[i] += kPi * (V2(l, 0) + sr * (a - b) / l);
          out.area_gradient[j] += kPi * (V2(l, 0) + sr * (b - a) / l);
        }
        out.volume_gradient[i] += kPi / 3.0 * (V2(b.y(), -b.x()) * sr + V2(cr, 0));
        out.volume_gradient[j] += kPi / 3.0 * (V2(-a.y(), a.x()) * sr + V2(cr, 0));
      }
    } else {
      out.area += l;
      out.volume += 0.5 * cr;
      if (with_gradients) {
        if (l > 0) {
          out.area_gradient[i] += (a - b) / l;
          out.area_gradient[j] += (b - a) / l;
        }
        out.volume_gradient[i] += 0.5 * V2(b.y(), -b.x());
        out.volume_gradient[j] += 0.5 * V2(-a.y(), a.x());
      }
    }
  }
  return out;
}

bool curve_self_intersects(std::span<const V2> pts, bool closed) {
  const std::size_t n = pts.size();
  const std::size_t segs = closed ? n : n - 1;
  for (std::size_t s = 0; s < segs; ++s) {
    const V2 &a = pts[s], &b = pts[(s + 1) % n];
    const V2 lo = a.cwiseMin(b), hi = a.cwiseMax(b);
    for (std::size_t t = s + 2; t < segs; ++t) {
      if (closed && s == 0 && t == segs - 1) continue;
      const V2 &c = pts[t], &d = pts[(t + 1) % n];
      if (c.x() > hi.x() && d.x() > hi.x()) continue;
      if (c.x() < lo.x() && d.x() < lo.x()) continue;
      if (c.y() > hi.y() && d.y() > hi.y()) continue;
      if (c.y() < lo.y() && d.y() < lo.y()) continue;
      if (segments_cross(a, b, c, d)) return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Construction

DiscreteHypersurface DiscreteHypersurface::polyline(ConeSpec cone, std::vector<V2> vertices, bool closed,
                                                    const Tolerances& tol) {
  if (cone.ambient_dim() != 2) throw ValidationError("polylines live in planar cones (ambient dimension 2)");
  if (vertices.size() < (closed ? 3u : 2u)) throw ValidationError("polyline needs at least two vertices");
  DiscreteHypersurface s(std::move(cone), Representation::Polyline);
  s.curve_ = std::move(vertices);
  s.closed_ = closed;
  s.validate(tol);
  s.orient();
  return s;
}

DiscreteHypersurface DiscreteHypersurface::axisymmetric(ConeSpec cone, std::vector<V2> meridian,
                                                        const Tolerances& tol) {
  if (!cone_supports_meridian(cone)) {
    throw ValidationError("axisymmetric profiles need a round cone or half-space in ambient dimension 3");
  }
  if (meridian.size() < 2) throw ValidationError("meridian profile needs at least two vertices");
  DiscreteHypersurface s(std::move(cone), Representation::Axisymmetric);
  s.curve_ = std::move(meridian);
  s.validate(tol);
  s.orient();
  return s;
}

DiscreteHypersurface DiscreteHypersurface::mesh(ConeSpec cone, std::vector<V3> vertices,
                                                std::vector<std::array<int, 3>> triangles,
                                                std::vector<bool> boundary_flags, const Tolerances& tol) {
  if (cone.ambient_dim() != 3) throw ValidationError("triangle meshes live in ambient dimension 3");
  if (triangles.empty()) throw ValidationError("mesh has no triangles");
  if (boundary_flags.empty()) boundary_flags.assign(vertices.size(), false);
  if (boundary_flags.size() != vertices.size()) throw ValidationError("boundary_flags size differs from vertex count");
  for (const auto& t : triangles) {
    for (int v : t) {
      if (v < 0 || static_cast<std::size_t>(v) >= vertices.size()) {
        throw ValidationError("triangle references a missing vertex");
      }
    }
  }
  DiscreteHypersurface s(std::move(cone), Representation::TriangleMesh);
  s.mesh_vertices_ = std::move(vertices);
  s.triangles_ = std::move(triangles);
  s.boundary_ = std::move(boundary_flags);
  s.validate(tol);
  s.orient();
  return s;
}

std::size_t DiscreteHypersurface::vertex_count() const {
  return is_curve() ? curve_.size() : mesh_vertices_.size();
}

Eigen::VectorXd DiscreteHypersurface::ambient_position(std::size_t i) const {
  switch (rep_) {
    case Representation::Polyline:
      return curve_[i];
    case Representation::Axisymmetric:
      return embed_meridian(curve_[i]);
    case Representation::TriangleMesh:
      return mesh_vertices_[i];
  }
  return {};
}

void DiscreteHypersurface::validate(const Tolerances& tol) {
  const std::size_t nv = vertex_count();
  const Tolerances wall_tol{.geometric = tol.surface_boundary};
  for (std::size_t i = 0; i < nv; ++i) {
    if (rep_ == Representation::Axisymmetric && curve_[i].x() < -tol.surface_boundary * std::max(1.0, curve_[i].norm())) {
      throw ValidationError("meridian vertex " + std::to_string(i) + " has negative rho");
    }
    const Eigen::VectorXd x = ambient_position(i);
    if (!x.allFinite()) throw ValidationError("vertex " + std::to_string(i) + " is not finite");
    if (!contains(cone_, x, wall_tol)) {
      throw ValidationError("vertex " + std::to_string(i) + " lies outside the cone");
    }
  }
  auto on_wall = [&](std::size_t i) {
    const Eigen::VectorXd x = ambient_position(i);
    return distance_to_boundary(cone_, x) <= tol.surface_boundary * std::max(1.0, x.norm());
  };
  if (is_curve()) {
    for (auto& v : curve_) {
      if (rep_ == Representation::Axisymmetric && v.x() < 0) v.x() = 0;
    }
    boundary_.assign(nv, false);
    if (!closed_) {
      for (std::size_t i : {std::size_t{0}, nv - 1}) {
        if (on_wall(i)) {
          boundary_[i] = true;
        } else if (rep_ == Representation::Axisymmetric && curve_[i].x() > tol.surface_boundary * std::max(1.0, curve_[i].norm())) {
          throw ValidationError("meridian endpoints must lie on the axis or on the cone wall");
        }
      }
    }
    if (curve_self_intersects(curve_, closed_)) throw ValidationError("discrete curve self-intersects");
  } else {
    const auto topo = build_topology(nv, triangles_);
    for (std::size_t i = 0; i < nv; ++i) {
      if (!boundary_[i]) continue;
      if (!on_wall(i)) throw ValidationError("flagged boundary vertex " + std::to_string(i) + " is off the cone wall");
      if (!topo.topological_boundary[i]) {
        throw ValidationError("vertex " + std::to_string(i) + " touches the wall at an interior point (tangency)");
      }
    }
    for (const auto& [e, count] : topo.edge_faces) {
      if (count > 2) throw ValidationError("non-manifold edge in mesh");
    }
    if (mesh_self_intersects(mesh_vertices_, triangles_)) throw ValidationError("mesh self-intersects");
  }
}

namespace {

bool volume_defined(const DiscreteHypersurface& s) {
  if (s.closed()) return true;
  const std::size_t nv = s.vertex_count();
  if (s.is_curve()) {
    if (s.representation() == Representation::Polyline) return s.boundary_flags()[0] && s.boundary_flags()[nv - 1];
    return true;  // meridian endpoints are on the axis or the wall by validation
  }
  const auto topo = build_topology(nv, s.triangles());
  for (std::size_t i = 0; i < nv; ++i) {
    if (topo.topological_boundary[i] && !s.boundary_flags()[i]) return false;
  }
  return true;
}

double signed_volume(const DiscreteHypersurface& s) {
  if (s.is_curve()) {
    return curve_functionals(s.curve_vertices(), s.representation() == Representation::Axisymmetric, s.closed(), false)
        .volume;
  }
  return mesh_signed_volume(s.mesh_vertices(), s.triangles());
}

}  // namespace

void DiscreteHypersurface::orient() {
  if (rep_ == Representation::TriangleMesh) {
    const auto topo = build_topology(mesh_vertices_.size(), triangles_);
    closed_ = std::none_of(topo.topological_boundary.begin(), topo.topological_boundary.end(), [](bool b) { return b; });
  }
  if (!volume_defined(*this)) return;
  if (signed_volume(*this) < 0) {
    flipped_ = !flipped_;
    if (is_curve()) {
      std::reverse(curve_.begin(), curve_.end());
      std::reverse(boundary_.begin(), boundary_.end());
    } else {
      for (auto& t : triangles_) std::swap(t[1], t[2]);
    }
  }
}

DiscreteHypersurface DiscreteHypersurface::scaled(double lambda) const {
  if (!(lambda > 0)) throw ValidationError("scale factor must be positive");
  DiscreteHypersurface s = *this;
  for (auto& v : s.curve_) v *= lambda;
  for (auto& v : s.mesh_vertices_) v *= lambda;
  return s;
}

// ---------------------------------------------------------------------------
// Measures

double area(const DiscreteHypersurface& s) {
  if (s.is_curve()) {
    return curve_functionals(s.curve_vertices(), s.representation() == Representation::Axisymmetric, s.closed(), false)
        .area;
  }
  return mesh_area(s.mesh_vertices(), s.triangles());
}

double enclosed_volume(const DiscreteHypersurface& s) {
  if (!volume_defined(s)) {
    throw ValidationError("enclosed volume needs every free end of the surface on the cone wall");
  }
  if (area(s) == 0) throw ValidationError("degenerate surface encloses no volume");
  return signed_volume(s);
}

Measure measure(const DiscreteHypersurface& s) { return {area(s), enclosed_volume(s)}; }

std::vector<Eigen::VectorXd> area_gradient(const DiscreteHypersurface& s) {
  std::vector<Eigen::VectorXd> out;
  if (s.is_curve()) {
    auto f = curve_functionals(s.curve_vertices(), s.representation() == Representation::Axisymmetric, s.closed());
    for (const auto& g : f.area_gradient) out.emplace_back(g);
  } else {
    for (const auto& g : mesh_area_gradient(s.mesh_vertices(), s.triangles())) out.emplace_back(g);
  }
  return out;
}

std::vector<Eigen::VectorXd> volume_gradient(const DiscreteHypersurface& s) {
  std::vector<Eigen::VectorXd> out;
  if (s.is_curve()) {
    auto f = curve_functionals(s.curve_vertices(), s.representation() == Representation::Axisymmetric, s.closed());
    for (const auto& g : f.volume_gradient) out.emplace_back(g);
  } else {
    for (const auto& g : mesh_volume_gradient(s.mesh_vertices(), s.triangles())) out.emplace_back(g);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quantities

namespace {

SurfaceQuantities curve_quantities(const DiscreteHypersurface& s, const Tolerances& tol) {
  const auto& p = s.curve_vertices();
  const bool meridian = s.representation() == Representation::Axisymmetric;
  const bool closed = s.closed();
  const std::size_t nv = p.size();
  SurfaceQuantities q;
  q.n = s.n();
  q.area_weight = curve_vertex_weights(p, meridian, closed);
  q.area = area(s);
  for (double w : q.area_weight) {
    if (w == 0 && nv > 1) throw ValidationError("zero-measure element in discrete curve");
  }
  std::vector<double> kappa(nv, 0.0);
  std::vector<V2> normal(nv);
  if (nv == 2) {
    const V2 t = p[1] - p[0];
    if (t.norm() == 0) throw ValidationError("zero-length element in discrete curve");
    normal[0] = normal[1] = rot90(t.normalized());
  } else {
    for (std::size_t i = 0; i < nv; ++i) {
      if (closed || (i > 0 && i + 1 < nv)) {
        const auto c = circle_through(p[(i + nv - 1) % nv], p[i], p[(i + 1) % nv]);
        kappa[i] = c.kappa;
        normal[i] = c.normal[1];
      } else if (meridian && p[i].x() <= tol.surface_boundary * std::max(1.0, p[i].norm())) {
        const auto [k, nrm] = axis_curvature(p, i == 0);
        kappa[i] = k;
        normal[i] = nrm;
      } else if (i == 0) {
        const auto c = circle_through(p[0], p[1], p[2]);
        kappa[i] = c.kappa;
        normal[i] = c.normal[0];
      } else {
        const auto c = circle_through(p[nv - 3], p[nv - 2], p[nv - 1]);
        kappa[i] = c.kappa;
        normal[i] = c.normal[2];
      }
    }
  }
  const auto grad = curve_functionals(p, meridian, closed).area_gradient;
  for (std::size_t i = 0; i < nv; ++i) {
    double H = kappa[i];
    double sigma2 = kappa[i] * kappa[i];
    Eigen::VectorXd pos = meridian ? embed_meridian(p[i]) : Eigen::VectorXd(p[i]);
    Eigen::VectorXd nrm = meridian ? embed_meridian(normal[i]) : Eigen::VectorXd(normal[i]);
    Eigen::VectorXd kv = meridian ? embed_meridian(-grad[i] / q.area_weight[i])
                                  : Eigen::VectorXd(-grad[i] / q.area_weight[i]);
    if (meridian) {
      const double rho = p[i].x();
      const bool on_axis = rho <= tol.surface_boundary * std::max(1.0, p[i].norm());
      if (on_axis && i > 0 && i + 1 < nv) throw ValidationError("meridian crosses the axis at an interior vertex");
      const double kp = on_axis ? kappa[i] : -normal[i].x() / rho;
      H = 0.5 * (kappa[i] + kp);
      sigma2 = kappa[i] * kappa[i] + kp * kp;
    }
    q.position.push_back(pos);
    q.normal.push_back(nrm);
    q.mean_curvature.push_back(H);
    q.sigma2.push_back(sigma2);
    q.support.push_back(pos.dot(nrm));
    q.curvature_vector.push_back(kv);
  }
  if (!closed) {
    for (std::size_t i : {std::size_t{0}, nv - 1}) {
      if (!s.boundary_flags()[i]) continue;
      if (q.position[i].norm() <= tol.surface_boundary) continue;  // cone vertex, not part of the free boundary
      const V2 t = -rot90(normal[i]);  // direction of travel
      const V2 nu2 = (i == 0) ? t : V2(-t);
      BoundaryVertex b;
      b.index = i;
      b.conormal = meridian ? embed_meridian(nu2) : Eigen::VectorXd(nu2);
      b.wall_normal = boundary_point(s.cone(), q.position[i], tol).inward_normal;
      b.length_weight = meridian ? 2 * kPi * p[i].x() : 1.0;
      q.boundary.push_back(std::move(b));
    }
  }
  return q;
}

SurfaceQuantities mesh_quantities(const DiscreteHypersurface& s, const Tolerances& tol) {
  const auto& x = s.mesh_vertices();
  const auto& tris = s.triangles();
  const std::size_t nv = x.size();
  const auto topo = build_topology(nv, tris);
  SurfaceQuantities q;
  q.n = 2;
  q.area_weight = mesh_vertex_weights(x, tris);
  q.area = mesh_area(x, tris);
  const auto grad = mesh_area_gradient(x, tris);
  std::vector<V3> nref(nv, V3::Zero());
  for (const auto& t : tris) {
    const V3 raw = tri_normal_raw(x[t[0]], x[t[1]], x[t[2]]);
    for (int v : t) nref[v] += raw;
  }
  for (std::size_t i = 0; i < nv; ++i) {
    if (q.area_weight[i] <= 0 || nref[i].norm() == 0) throw ValidationError("isolated or degenerate mesh vertex");
    nref[i].normalize();
    std::vector<V3> ring;
    for (int j : two_ring(topo, static_cast<int>(i))) ring.push_back(x[j]);
    const auto fit = fit_quadric(x[i], nref[i], ring);
    const V3 kv = -grad[i] / q.area_weight[i];
    const V3 N = fit.normal;
    double H;
    if (topo.topological_boundary[i]) {
      H = 0.5 * (fit.k1 + fit.k2);
    } else {
      H = 0.5 * kv.dot(N);
    }
    const double aniso = fit.k1 - fit.k2;
    q.position.emplace_back(x[i]);
    q.normal.emplace_back(N);
    q.mean_curvature.push_back(H);
    q.sigma2.push_back(2 * H * H + 0.5 * aniso * aniso);
    q.support.push_back(x[i].dot(N));
    q.curvature_vector.emplace_back(kv);
  }
  for (std::size_t i = 0; i < nv; ++i) {
    if (!s.boundary_flags()[i] || x[i].norm() <= tol.surface_boundary) continue;
    const auto& bn = topo.boundary_neighbors[i];
    if (bn.size() != 2) throw ValidationError("mesh boundary is not a simple loop at vertex " + std::to_string(i));
    const V3 N = q.normal[i];
    const V3 T = (x[bn[1]] - x[bn[0]]).normalized();
    V3 nu = N.cross(T);
    V3 inward = V3::Zero();
    for (int j : topo.neighbors[i]) {
      if (!topo.topological_boundary[j]) inward += x[j] - x[i];
    }
    if (inward.norm() == 0) {
      for (int f : topo.vertex_triangles[i]) {
        const auto& t = tris[f];
        inward += (x[t[0]] + x[t[1]] + x[t[2]]) / 3.0 - x[i];
      }
    }
    if (nu.dot(inward) < 0) nu = -nu;
    nu = (nu - nu.dot(N) * N).normalized();
    BoundaryVertex b;
    b.index = i;
    b.conormal = nu;
    b.wall_normal = boundary_point(s.cone(), x[i], tol).inward_normal;
    b.length_weight = 0.5 * ((x[bn[0]] - x[i]).norm() + (x[bn[1]] - x[i]).norm());
    q.boundary.push_back(std::move(b));
  }
  return q;
}

}  // namespace

SurfaceQuantities quantities(const DiscreteHypersurface& s, const Tolerances& tol) {
  return s.is_curve() ? curve_quantities(s, tol) : mesh_quantities(s, tol);
}

double contact_angle_residual(const SurfaceQuantities& q) {
  double r = 0;
  for (const auto& b : q.boundary) r = std::max(r, std::abs(q.normal[b.index].dot(b.wall_normal)));
  return r;
}

double contact_angle_residual(const DiscreteHypersurface& s, const Tolerances& tol) {
  return contact_angle_residual(quantities(s, tol));
}

// ---------------------------------------------------------------------------
// Refinement

DiscreteHypersurface refine(const DiscreteHypersurface& s, int factor,
                            const std::function<V3(const V3&)>& snap) {
  if (factor < 1) throw ValidationError("refinement factor must be >= 1");
  if (factor == 1) return s;
  if (s.is_curve()) {
    const auto& p = s.curve_vertices();
    const std::size_t nv = p.size();
    const bool closed = s.closed();
    const std::size_t segs = closed ? nv : nv - 1;
    std::vector<V2> out;
    for (std::size_t seg = 0; seg < segs; ++seg) {
      const std::size_t i = seg, j = (seg + 1) % nv;
      out.push_back(p[i]);
      std::vector<Circle3> circles;
      if (closed || i > 0) circles.push_back(circle_through(p[(i + nv - 1) % nv], p[i], p[j]));
      if (closed || j + 1 < nv) circles.push_back(circle_through(p[i], p[j], p[(j + 1) % nv]));
      for (int k = 1; k < factor; ++k) {
        const double f = static_cast<double>(k) / factor;
        V2 acc = V2::Zero();
        if (circles.empty()) {
          acc = (1 - f) * p[i] + f * p[j];
        } else {
          for (const auto& c : circles) acc += c.collinear ? V2((1 - f) * p[i] + f * p[j]) : arc_point(c.center, p[i], p[j], f);
          acc /= static_cast<double>(circles.size());
        }
        out.push_back(acc);
      }
    }
    if (!closed) out.push_back(p.back());
    if (s.representation() == Representation::Polyline) return DiscreteHypersurface::polyline(s.cone(), out, closed);
    return DiscreteHypersurface::axisymmetric(s.cone(), out);
  }
  if ((factor & (factor - 1)) != 0) throw ValidationError("mesh refinement factor must be a power of two");
  DiscreteHypersurface current = s;
  for (int level = 1; level < factor; level *= 2) {
    const auto q = snap ? SurfaceQuantities{} : quantities(current);
    auto x = current.mesh_vertices();
    auto flags = current.boundary_flags();
    const auto& tris = current.triangles();
    const auto topo = build_topology(x.size(), tris);
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
      if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
      const V3 pa = x[a], pb = x[b];
      V3 m = 0.5 * (pa + pb);
      const bool boundary_edge = topo.edge_faces.at(key) == 1 && flags[a] && flags[b];
      if (snap) {
        m = snap(m);
      } else {
        const V3 na = q.normal[a], nb = q.normal[b];
        const V3 e = pb - pa;
        const double l2 = e.squaredNorm();
        const double kappa = (na - nb).dot(e) / l2;
        const V3 dir = na + nb;
        if (std::abs(kappa) > 0 && dir.norm() > 0) {
          const double half = 0.5 * std::sqrt(l2) * std::abs(kappa);
          const double sag = half < 1 ? (1 - std::sqrt(1 - half * half)) / std::abs(kappa) : 0.5 * std::sqrt(l2);
          m -= (kappa > 0 ? 1.0 : -1.0) * sag * dir.normalized();
        }
      }
      if (boundary_edge) m = project_to_boundary(current.cone(), m);
      x.push_back(m);
      flags.push_back(boundary_edge);
      const int id = static_cast<int>(x.size()) - 1;
      midpoint[key] = id;
      return id;
    };
    std::vector<std::array<int, 3>> next;
    for (const auto& t : tris) {
      const int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    current = DiscreteHypersurface::mesh(current.cone(), std::move(x), std::move(next), std::move(flags));
  }
  return current;
}

// ---------------------------------------------------------------------------
// Calculus on the surface

double dirichlet_energy(const DiscreteHypersurface& s, std::span<const double> u) {
  if (u.size() != s.vertex_count()) throw ValidationError("field size differs from vertex count");
  double e = 0;
  if (s.is_curve()) {
    const auto& p = s.curve_vertices();
    const bool meridian = s.representation() == Representation::Axisymmetric;
    const std::size_t nv = p.size();
    const std::size_t segs = s.closed() ? nv : nv - 1;
    for (std::size_t seg = 0; seg < segs; ++seg) {
      const std::size_t i = seg, j = (seg + 1) % nv;
      const double l = (p[j] - p[i]).norm();
      const double du = (u[j] - u[i]) / l;
      const double m = meridian ? kPi * (p[i].x() + p[j].x()) * l : l;
      e += du * du * m;
    }
    return e;
  }
  const auto& x = s.mesh_vertices();
  for (const auto& t : s.triangles()) {
    const V3 &a = x[t[0]], &b = x[t[1]], &c = x[t[2]];
    const V3 raw = tri_normal_raw(a, b, c);
    const double area2 = raw.norm();
    const V3 nhat = raw / area2;
    const V3 g = (u[t[0]] * nhat.cross(c - b) + u[t[1]] * nhat.cross(a - c) + u[t[2]] * nhat.cross(b - a)) / area2;
    e += g.squaredNorm() * 0.5 * area2;
  }
  return e;
}

double conormal_derivative(const DiscreteHypersurface& s, const SurfaceQuantities& q, std::span<const double> values,
                           const BoundaryVertex& b) {
  if (values.size() != s.vertex_count()) throw ValidationError("field size differs from vertex count");
  if (s.is_curve()) {
    const auto& p = s.curve_vertices();
    const std::size_t nv = p.size();
    const std::size_t m = std::min<std::size_t>(5, nv);
    std::vector<double> sv, fv;
    double acc = 0;
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t idx = b.index == 0 ? k : nv - 1 - k;
      if (k > 0) {
        const std::size_t prev = b.index == 0 ? k - 1 : nv - k;
        acc += (p[idx] - p[prev]).norm();
      }
      sv.push_back(acc);
      fv.push_back(values[idx]);
    }
    return derivative_at_first_node(sv, fv);
  }
  const auto& x = s.mesh_vertices();
  const auto topo = build_topology(x.size(), s.triangles());
  const V3 p = x[b.index];
  const V3 N = q.normal[b.index];
  const V3 nu = b.conormal;
  const V3 e2 = N.cross(nu);
  const auto ring = two_ring(topo, static_cast<int>(b.index));
  const int cols = ring.size() >= 5 ? 5 : 2;
  Eigen::MatrixXd A(ring.size(), cols);
  Eigen::VectorXd rhs(ring.size());
  for (std::size_t r = 0; r < ring.size(); ++r) {
    const V3 d = x[ring[r]] - p;
    const double u = d.dot(nu), v = d.dot(e2);
    if (cols == 5) {
      A.row(r) << u, v, u * u, u * v, v * v;
    } else {
      A.row(r) << u, v;
    }
    rhs(r) = values[ring[r]] - values[b.index];
  }
  const Eigen::VectorXd sol = A.colPivHouseholderQr().solve(rhs);
  return sol(0);
}

// ---------------------------------------------------------------------------
// Serialization

json surface_to_json(const DiscreteHypersurface& s) {
  json j;
  j["representation"] = to_string(s.representation());
  json verts = json::array();
  json elems = json::array();
  if (s.is_curve()) {
    for (const auto& v : s.curve_vertices()) verts.push_back({v.x(), v.y()});
    const std::size_t nv = s.curve_vertices().size();
    for (std::size_t i = 0; i + 1 < nv; ++i) elems.push_back({i, i + 1});
    if (s.closed()) elems.push_back({nv - 1, 0});
  } else {
    for (const auto& v : s.mesh_vertices()) verts.push_back({v.x(), v.y(), v.z()});
    for (const auto& t : s.triangles()) elems.push_back({t[0], t[1], t[2]});
  }
  j["vertices"] = verts;
  j["elements"] = elems;
  j["boundary_flags"] = s.boundary_flags();
  return j;
}

DiscreteHypersurface surface_from_json(const json& j, const ConeSpec& cone, const Tolerances& tol) {
  if (!j.is_object()) throw ValidationError("surface must be a JSON object");
  for (const auto& [k, _] : j.items()) {
    if (k != "representation" && k != "vertices" && k != "elements" && k != "boundary_flags") {
      throw ValidationError("unknown key '" + k + "' in surface file");
    }
  }
  if (!j.contains("representation") || !j["representation"].is_string()) {
    throw ValidationError("surface file needs a string 'representation'");
  }
  if (!j.contains("vertices") || !j["vertices"].is_array()) throw ValidationError("surface file needs 'vertices'");
  const auto rep = j["representation"].get<std::string>();
  const std::size_t dim = rep == "mesh" ? 3 : 2;
  std::vector<Eigen::VectorXd> verts;
  for (const auto& v : j["vertices"]) {
    if (!v.is_array() || v.size() != dim) {
      throw ValidationError("each vertex of a " + rep + " needs " + std::to_string(dim) + " coordinates");
    }
    Eigen::VectorXd x(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      if (!v[k].is_number()) throw ValidationError("vertex coordinates must be numbers");
      x(static_cast<Eigen::Index>(k)) = v[k].get<double>();
    }
    verts.push_back(x);
  }
  const json elems = j.value("elements", json::array());
  std::vector<bool> flags;
  if (j.contains("boundary_flags")) {
    if (!j["boundary_flags"].is_array()) throw ValidationError("'boundary_flags' must be an array of booleans");
    for (const auto& f : j["boundary_flags"]) {
      if (!f.is_boolean()) throw ValidationError("'boundary_flags' must be an array of booleans");
      flags.push_back(f.get<bool>());
    }
  }
  if (rep == "polyline" || rep == "axisymmetric") {
    std::vector<V2> pts;
    for (const auto& v : verts) pts.emplace_back(v(0), v(1));
    bool closed = false;
    const std::size_t nv = pts.size();
    for (std::size_t e = 0; e < elems.size(); ++e) {
      const auto& el = elems[e];
      if (!el.is_array() || el.size() != 2) throw ValidationError("curve elements must be index pairs");
      const auto a = el[0].get<std::size_t>(), b = el[1].get<std::size_t>();
      if (a == e && b == e + 1) continue;
      if (e + 1 == elems.size() && a == nv - 1 && b == 0 && rep == "polyline") {
        closed = true;
        continue;
      }
      throw ValidationError("curve elements must chain consecutive vertices");
    }
    auto s = rep == "polyline" ? DiscreteHypersurface::polyline(cone, pts, closed, tol)
                               : DiscreteHypersurface::axisymmetric(cone, pts, tol);
    if (!flags.empty()) {
      auto computed = s.boundary_flags();
      if (s.orientation_flipped()) std::reverse(computed.begin(), computed.end());
      if (flags.size() != computed.size()) throw ValidationError("boundary_flags size differs from vertex count");
      for (std::size_t i = 0; i < flags.size(); ++i) {
        if (flags[i] && !computed[i]) throw ValidationError("vertex " + std::to_string(i) + " is flagged but off the wall");
      }
    }
    return s;
  }
  if (rep == "mesh") {
    std::vector<V3> pts;
    for (const auto& v : verts) pts.emplace_back(v(0), v(1), v(2));
    std::vector<std::array<int, 3>> tris;
    for (const auto& el : elems) {
      if (!el.is_array() || el.size() != 3) throw ValidationError("mesh elements must be index triples");
      tris.push_back({el[0].get<int>(), el[1].get<int>(), el[2].get<int>()});
    }
    return DiscreteHypersurface::mesh(cone, std::move(pts), std::move(tris), std::move(flags), tol);
  }
  throw ValidationError("unknown representation '" + rep + "'");
}

std::string quantities_csv(const SurfaceQuantities& q, const DiscreteHypersurface& s) {
  std::ostringstream out;
  out << "idx,x,y,z,H,sigma2,g,area_weight,is_boundary\n";
  for (std::size_t i = 0; i < q.position.size(); ++i) {
    const auto& x = q.position[i];
    const double z = x.size() > 2 ? x(2) : 0.0;
    out << i << ',' << format_double(x(0)) << ',' << format_double(x(1)) << ',' << format_double(z) << ','
        << format_double(q.mean_curvature[i]) << ',' << format_double(q.sigma2[i]) << ','
        << format_double(q.support[i]) << ',' << format_double(q.area_weight[i]) << ','
        << (s.boundary_flags()[i] ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace coneiso
