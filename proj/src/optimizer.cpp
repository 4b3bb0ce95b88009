#include "coneiso/optimizer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "coneiso/candidates.hpp"
#include "coneiso/errors.hpp"
#include "coneiso/stability.hpp"

namespace coneiso {

namespace {

constexpr double kPi = std::numbers::pi;
using V2 = Eigen::Vector2d;

// The optimizer works on a plane curve: the polyline itself in a planar cone,
// or the meridian (rho, z) of a surface of revolution. Each endpoint slides on
// a half-line t * dir, t >= 0, through the vertex.
struct Geometry {
  bool meridian;
  double wall_angle;  // sector opening, or the half-angle alpha from the axis
  V2 first_wall;      // direction of ray 0 (planar) / axis (meridian)
  V2 second_wall;     // direction of ray theta (planar) / wall ruling (meridian)
  int n;
  double omega;
};

Geometry geometry_of(const ConeSpec& cone) {
  Geometry g;
  g.n = cone.n();
  g.omega = solid_angle(cone);
  if (cone.ambient_dim() == 2) {
    g.meridian = false;
    if (const auto* s = std::get_if<Sector>(&cone.shape())) {
      g.wall_angle = s->theta;
    } else if (std::holds_alternative<HalfSpace>(cone.shape())) {
      g.wall_angle = kPi;
    } else {
      throw ValidationError("the optimizer supports sectors and half-planes in dimension 2");
    }
    g.first_wall = {1.0, 0.0};
    g.second_wall = {std::cos(g.wall_angle), std::sin(g.wall_angle)};
    return g;
  }
  if (cone.ambient_dim() == 3) {
    g.meridian = true;
    if (const auto* c = std::get_if<Circular>(&cone.shape())) {
      g.wall_angle = c->alpha;
    } else if (std::holds_alternative<HalfSpace>(cone.shape())) {
      g.wall_angle = kPi / 2;
    } else {
      throw ValidationError("the optimizer supports only round cones (or half-spaces) in dimension 3");
    }
    g.first_wall = {0.0, 1.0};
    g.second_wall = {std::sin(g.wall_angle), std::cos(g.wall_angle)};
    if (g.wall_angle == kPi / 2) g.second_wall = {1.0, 0.0};
    return g;
  }
  throw ValidationError("the optimizer needs ambient dimension 2 or 3");
}

double reference_radius(const Geometry& g, double volume) {
  return std::pow((g.n + 1) * volume / g.omega, 1.0 / (g.n + 1));
}

struct Curve {
  std::vector<V2> x;
  V2 dir_start, dir_end;
};

double param(const V2& p, const V2& d) { return std::max(0.0, p.dot(d)); }

// Thomas algorithm for a symmetric tridiagonal system.
std::vector<double> solve_tridiagonal(std::vector<double> diag, const std::vector<double>& off, std::vector<double> rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double m = off[i - 1] / diag[i - 1];
    diag[i] -= m * off[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - off[i] * rhs[i + 1]) / diag[i];
  return rhs;
}

// Resamples the polyline at uniform arc length, keeping the endpoints.
std::vector<V2> resample(const std::vector<V2>& x) {
  const std::size_t n = x.size();
  std::vector<double> s(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) s[i] = s[i - 1] + (x[i] - x[i - 1]).norm();
  std::vector<V2> out(n);
  out.front() = x.front();
  out.back() = x.back();
  std::size_t seg = 0;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double target = s.back() * static_cast<double>(k) / static_cast<double>(n - 1);
    while (seg + 2 < n && s[seg + 1] < target) ++seg;
    const double len = s[seg + 1] - s[seg];
    const double f = len > 0 ? (target - s[seg]) / len : 0.0;
    out[k] = (1 - f) * x[seg] + f * x[seg + 1];
  }
  return out;
}

// Smooth random radial factor 1 + amplitude * noise(t), t in [0, 1].
std::vector<double> blob_factors(std::mt19937_64& rng, int count, double amplitude) {
  constexpr int kModes = 6;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2 * kPi);
  std::vector<double> a(kModes), ph(kModes);
  for (int k = 0; k < kModes; ++k) {
    a[k] = normal(rng) / (k + 1);
    ph[k] = phase(rng);
  }
  std::vector<double> noise(count);
  double peak = 0;
  for (int i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / (count - 1);
    double v = 0;
    for (int k = 0; k < kModes; ++k) v += a[k] * std::cos(kPi * (k + 1) * t + ph[k]);
    noise[i] = v;
    peak = std::max(peak, std::abs(v));
  }
  for (auto& v : noise) v = 1 + amplitude * v / (peak > 0 ? peak : 1.0);
  return noise;
}

Curve initial_curve(const Geometry& g, const OptimizationConfig& cfg, Initializer init, std::mt19937_64& rng) {
  const int m = cfg.resolution;
  const double r = reference_radius(g, cfg.target_volume);
  Curve c;
  c.x.resize(m);
  if (init == Initializer::BoundaryHalfBall) {
    if (g.meridian) {
      if (std::abs(g.wall_angle - kPi / 2) > 1e-12) {
        throw ValidationError("BoundaryHalfBall needs a flat wall: use a half-space or Circular(pi/2) in dimension 3");
      }
      init = Initializer::VertexCap;  // the axisymmetric half-ball is centered at the vertex
    } else {
      const double rh = std::sqrt(2 * cfg.target_volume / kPi);
      const double d = rh * std::max(1.5, 1.1 / std::sin(std::min(g.wall_angle, kPi / 2)));
      for (int i = 0; i < m; ++i) {
        const double t = kPi * i / (m - 1);
        c.x[i] = V2(d, 0.0) + rh * V2(std::cos(t), std::sin(t));
      }
      c.x.front() = {d + rh, 0.0};
      c.x.back() = {d - rh, 0.0};
      c.dir_start = c.dir_end = g.first_wall;
      return c;
    }
  }
  std::vector<double> factor(m, 1.0);
  if (init == Initializer::RandomBlob) factor = blob_factors(rng, m, 0.3);
  for (int i = 0; i < m; ++i) {
    const double phi = g.wall_angle * i / (m - 1);
    const double rr = r * factor[i];
    c.x[i] = g.meridian ? V2(rr * std::sin(phi), rr * std::cos(phi)) : V2(rr * std::cos(phi), rr * std::sin(phi));
  }
  c.x.front() = factor.front() * r * g.first_wall;
  c.x.back() = factor.back() * r * g.second_wall;
  c.dir_start = g.first_wall;
  c.dir_end = g.second_wall;
  return c;
}

struct Evaluation {
  CurveFunctionals f;
  std::vector<double> w;
};

Evaluation evaluate(const Geometry& g, const Curve& c) {
  return {curve_functionals(c.x, g.meridian, false), curve_vertex_weights(c.x, g.meridian, false)};
}

void orient_positive(const Geometry& g, Curve& c) {
  if (curve_functionals(c.x, g.meridian, false, false).volume < 0) {
    std::reverse(c.x.begin(), c.x.end());
    std::swap(c.dir_start, c.dir_end);
  }
}

void scale_to_volume(const Geometry& g, Curve& c, double target) {
  const double v = curve_functionals(c.x, g.meridian, false, false).volume;
  if (!(v > 0)) throw NumericalError("initial curve encloses no volume");
  const double lambda = std::pow(target / v, 1.0 / (g.n + 1));
  for (auto& p : c.x) p *= lambda;
}

std::optional<DiscreteHypersurface> as_surface(const ConeSpec& cone, const Geometry& g, const Curve& c) {
  try {
    if (g.meridian) return DiscreteHypersurface::axisymmetric(cone, c.x);
    return DiscreteHypersurface::polyline(cone, c.x);
  } catch (const ValidationError&) {
    return std::nullopt;
  }
}

// Projected gradient of the Lagrangian: endpoint components along their wall,
// with the outward component removed at a clamped (t = 0) endpoint.
std::vector<V2> projected(const Curve& c, std::vector<V2> grad) {
  auto project_end = [](V2& gvec, const V2& pos, const V2& dir) {
    double along = gvec.dot(dir);
    if (pos.dot(dir) <= 0 && along > 0) along = 0;  // descent would push t below 0
    gvec = along * dir;
  };
  project_end(grad.front(), c.x.front(), c.dir_start);
  project_end(grad.back(), c.x.back(), c.dir_end);
  return grad;
}

double mass_norm(const std::vector<V2>& v, const std::vector<double>& w) {
  double s = 0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i].squaredNorm() / w[i];
  return std::sqrt(s);
}

struct EndConstraint {
  std::size_t node;
  V2 direction;  // the step component along this direction is held at zero
};

// A = M + eps K acting on each coordinate, with M the lumped vertex weights
// and K the (density weighted) stiffness of the polyline.
struct Preconditioner {
  std::vector<double> diag, off;

  std::vector<double> apply_inverse(std::vector<double> rhs) const { return solve_tridiagonal(diag, off, std::move(rhs)); }

  // argmin 1/2 D^T A D - G^T D subject to the endpoint constraints
  std::vector<V2> solve(const std::vector<V2>& G, const std::vector<EndConstraint>& cons) const {
    const std::size_t m = G.size();
    std::vector<double> gx(m), gy(m);
    for (std::size_t i = 0; i < m; ++i) {
      gx[i] = G[i].x();
      gy[i] = G[i].y();
    }
    const auto dx = apply_inverse(gx);
    const auto dy = apply_inverse(gy);
    std::vector<V2> D(m);
    for (std::size_t i = 0; i < m; ++i) D[i] = {dx[i], dy[i]};
    if (cons.empty()) return D;
    const std::size_t k = cons.size();
    std::vector<std::vector<double>> Z(k);
    for (std::size_t j = 0; j < k; ++j) {
      std::vector<double> e(m, 0.0);
      e[cons[j].node] = 1.0;
      Z[j] = apply_inverse(std::move(e));
    }
    Eigen::MatrixXd S(k, k);
    Eigen::VectorXd r(k);
    for (std::size_t i = 0; i < k; ++i) {
      r(i) = cons[i].direction.dot(D[cons[i].node]);
      for (std::size_t j = 0; j < k; ++j) {
        S(i, j) = cons[i].direction.dot(cons[j].direction) * Z[j][cons[i].node];
      }
    }
    const Eigen::VectorXd eta = S.colPivHouseholderQr().solve(r);
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < m; ++i) D[i] -= eta(j) * Z[j][i] * cons[j].direction;
    }
    for (const auto& con : cons) D[con.node] -= con.direction.dot(D[con.node]) * con.direction;
    return D;
  }
};

// Meridian densities 2 pi rho are floored at 2 pi floor_radius so that the
// preconditioned flow stays stable next to the axis.
Preconditioner preconditioner(const Geometry& g, const Curve& c, const std::vector<double>& w, double eps,
                              double floor_radius) {
  const std::size_t m = c.x.size();
  Preconditioner A{w, std::vector<double>(m - 1)};
  for (std::size_t s = 0; s + 1 < m; ++s) {
    const double len = (c.x[s + 1] - c.x[s]).norm();
    double density = 1.0;
    if (g.meridian) {
      density = kPi * (c.x[s].x() + c.x[s + 1].x());
      const double extra = std::max(0.0, 2 * kPi * floor_radius - density);
      A.diag[s] += 0.5 * len * extra;
      A.diag[s + 1] += 0.5 * len * extra;
      density += extra;
    }
    const double k = eps * density / len;
    A.diag[s] += k;
    A.diag[s + 1] += k;
    A.off[s] = -k;
  }
  return A;
}

struct Lagrangian {
  double lambda;
  double mu;
  double target;
  double merit(double P, double V) const {
    const double c = target - V;
    return P + lambda * c + 0.5 * mu * c * c;
  }
  double multiplier(double V) const { return lambda + mu * (target - V); }
};

}  // namespace

std::string to_string(Initializer i) {
  switch (i) {
    case Initializer::VertexCap:
      return "VertexCap";
    case Initializer::BoundaryHalfBall:
      return "BoundaryHalfBall";
    case Initializer::RandomBlob:
      return "RandomBlob";
  }
  return "?";
}

Initializer initializer_from_string(const std::string& s) {
  if (s == "VertexCap") return Initializer::VertexCap;
  if (s == "BoundaryHalfBall") return Initializer::BoundaryHalfBall;
  if (s == "RandomBlob") return Initializer::RandomBlob;
  throw ValidationError("unknown initializer '" + s + "' (VertexCap, BoundaryHalfBall, RandomBlob)");
}

void OptimizationConfig::validate() const {
  if (!(target_volume > 0) || !std::isfinite(target_volume)) throw ValidationError("volume must be positive");
  if (!(step_size > 0)) throw ValidationError("step_size must be positive");
  if (max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
  if (!(grad_tolerance > 0)) throw ValidationError("grad_tolerance must be positive");
  if (!(volume_tolerance > 0)) throw ValidationError("volume_tolerance must be positive");
  if (!(penalty_initial > 0)) throw ValidationError("penalty_initial must be positive");
  if (!(penalty_growth > 1)) throw ValidationError("penalty_growth must be > 1");
  if (resolution < 8) throw ValidationError("resolution must be >= 8");
  if (restarts < 1) throw ValidationError("restarts must be >= 1");
}

json to_json(const OptimizationConfig& c) {
  return json{{"target_volume", c.target_volume},     {"step_size", c.step_size},
              {"max_iterations", c.max_iterations},   {"grad_tolerance", c.grad_tolerance},
              {"volume_tolerance", c.volume_tolerance}, {"penalty_initial", c.penalty_initial},
              {"penalty_growth", c.penalty_growth},   {"resolution", c.resolution},
              {"restarts", c.restarts},               {"rng_seed", c.rng_seed},
              {"initializer", to_string(c.initializer)}};
}

OptimizationConfig config_from_json(const json& j, OptimizationConfig c, const std::string& path) {
  if (!j.is_object()) throw ValidationError((path.empty() ? std::string("config") : path) + ": expected an object");
  auto key_path = [&path](const std::string& k) { return path.empty() ? k : path + "." + k; };
  auto number = [&](const std::string& k, const json& v) {
    if (!v.is_number()) throw ValidationError(key_path(k) + ": expected a number");
    return v.get<double>();
  };
  auto integer = [&](const std::string& k, const json& v) {
    if (!v.is_number_integer()) throw ValidationError(key_path(k) + ": expected an integer");
    return v.get<long long>();
  };
  for (const auto& [k, v] : j.items()) {
    if (k == "target_volume") {
      c.target_volume = number(k, v);
    } else if (k == "step_size") {
      c.step_size = number(k, v);
    } else if (k == "max_iterations") {
      c.max_iterations = static_cast<int>(integer(k, v));
    } else if (k == "grad_tolerance") {
      c.grad_tolerance = number(k, v);
    } else if (k == "volume_tolerance") {
      c.volume_tolerance = number(k, v);
    } else if (k == "penalty_initial") {
      c.penalty_initial = number(k, v);
    } else if (k == "penalty_growth") {
      c.penalty_growth = number(k, v);
    } else if (k == "resolution") {
      c.resolution = static_cast<int>(integer(k, v));
    } else if (k == "restarts") {
      c.restarts = static_cast<int>(integer(k, v));
    } else if (k == "rng_seed") {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        throw ValidationError(key_path(k) + ": expected a non-negative integer");
      }
      c.rng_seed = v.get<std::uint64_t>();
    } else if (k == "initializer") {
      if (!v.is_string()) throw ValidationError(key_path(k) + ": expected a string");
      try {
        c.initializer = initializer_from_string(v.get<std::string>());
      } catch (const ValidationError& e) {
        throw ValidationError(key_path(k) + ": " + e.what());
      }
    } else {
      throw ValidationError("unknown configuration key '" + key_path(k) + "'");
    }
  }
  return c;
}

OptimizationRun minimize_single(const ConeSpec& cone, const OptimizationConfig& cfg, Initializer init,
                                int restart_index) {
  cfg.validate();
  const Geometry g = geometry_of(cone);
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.rng_seed & 0xffffffffu), static_cast<std::uint32_t>(cfg.rng_seed >> 32),
                    static_cast<std::uint32_t>(restart_index)};
  std::mt19937_64 rng(seq);

  Curve c = initial_curve(g, cfg, init, rng);
  orient_positive(g, c);
  scale_to_volume(g, c, cfg.target_volume);

  OptimizationRun run{.config = cfg, .cone = cone, .trace = {}, .final_surface = {}, .restart_perimeters = {},
                      .warnings = {}};
  run.restart_index = restart_index;

  const double V0 = cfg.target_volume;
  const double r_ref = reference_radius(g, V0);
  const double tau0 = cfg.step_size * r_ref * r_ref;
  const double eps = 0.1 * r_ref * r_ref;  // smoothing length^2 of the preconditioner

  Evaluation ev = evaluate(g, c);
  // least-squares multiplier of the initial shape
  double num = 0, den = 0;
  for (std::size_t i = 0; i < c.x.size(); ++i) {
    num += ev.f.area_gradient[i].dot(ev.f.volume_gradient[i]) / ev.w[i];
    den += ev.f.volume_gradient[i].squaredNorm() / ev.w[i];
  }
  Lagrangian L{num / den, cfg.penalty_initial * ev.f.area / (V0 * V0), V0};

  int segment = 0;
  int iter = 0;
  double grad_norm = std::numeric_limits<double>::infinity();

  auto lagrangian_gradient = [&](const Evaluation& e) {
    const double Lam = L.multiplier(e.f.volume);
    std::vector<V2> G(c.x.size());
    for (std::size_t i = 0; i < G.size(); ++i) G[i] = e.f.area_gradient[i] - Lam * e.f.volume_gradient[i];
    return G;
  };
  auto relative_grad = [&](const Evaluation& e, const std::vector<V2>& G) {
    const double ref = mass_norm(projected(c, e.f.area_gradient), e.w);
    return ref > 0 ? mass_norm(projected(c, G), e.w) / ref : 0.0;
  };
  auto record = [&](const Evaluation& e, double gn) {
    TraceRow row{iter, e.f.area, e.f.volume, gn, 0.0, 0.0, L.merit(e.f.area, e.f.volume), L.multiplier(e.f.volume),
                 segment};
    if (auto s = as_surface(cone, g, c)) {
      try {
        const auto q = quantities(*s);
        row.contact_residual = contact_angle_residual(q);
        row.curvature_spread = curvature_spread(q);
      } catch (const ValidationError&) {
        row.contact_residual = row.curvature_spread = std::numeric_limits<double>::quiet_NaN();
      }
    }
    run.trace.push_back(row);
  };

  {
    const auto G = lagrangian_gradient(ev);
    grad_norm = relative_grad(ev, G);
    record(ev, grad_norm);
  }

  double tau = tau0;
  double previous_violation = std::abs(V0 - ev.f.volume);
  constexpr int kInnerMax = 150;
  constexpr int kMaxRejections = 40;
  bool converged = false;

  for (int outer = 0; iter < cfg.max_iterations && outer < cfg.max_iterations; ++outer) {
    // inner descent at fixed multiplier and penalty
    for (int inner = 0; inner < kInnerMax && iter < cfg.max_iterations; ++inner) {
      const auto G = lagrangian_gradient(ev);
      grad_norm = relative_grad(ev, G);
      if (grad_norm < cfg.grad_tolerance) break;

      const std::size_t m = c.x.size();
      const Preconditioner A = preconditioner(g, c, ev.w, eps, 0.25 * r_ref);
      std::vector<EndConstraint> cons;
      auto constrain_end = [&](std::size_t node, const V2& pos, const V2& dir) {
        cons.push_back({node, V2(-dir.y(), dir.x())});
        if (pos.dot(dir) <= 0) cons.push_back({node, dir});
      };
      constrain_end(0, c.x.front(), c.dir_start);
      constrain_end(m - 1, c.x.back(), c.dir_end);
      std::vector<V2> D = A.solve(G, cons);
      // release a clamped endpoint whose constrained descent points back into the cone
      bool released = false;
      for (std::size_t k = 0; k < cons.size(); ++k) {
        const std::size_t node = cons[k].node;
        const V2& dir = node == 0 ? c.dir_start : c.dir_end;
        if (cons[k].direction != dir) continue;
        std::vector<EndConstraint> trial_cons = cons;
        trial_cons.erase(trial_cons.begin() + static_cast<std::ptrdiff_t>(k));
        const auto D2 = A.solve(G, trial_cons);
        if (D2[node].dot(dir) < 0) {
          cons = std::move(trial_cons);
          released = true;
          break;
        }
      }
      if (released) D = A.solve(G, cons);

      const double merit_old = L.merit(ev.f.area, ev.f.volume);
      // endpoint update along its wall; lands on the vertex when within 1e-6 r_ref
      auto slide = [&](const V2& p, const V2& d, const V2& dir) -> V2 {
        const double t = param(p, dir) - tau * d.dot(dir);
        return t < 1e-6 * r_ref ? V2(0.0, 0.0) : V2(t * dir);
      };
      int rejections = 0;
      bool geometric_rejection = false;
      bool accepted = false;
      while (rejections < kMaxRejections) {
        Curve trial = c;
        for (std::size_t i = 1; i + 1 < m; ++i) trial.x[i] = c.x[i] - tau * D[i];
        trial.x.front() = slide(c.x.front(), D.front(), c.dir_start);
        trial.x.back() = slide(c.x.back(), D.back(), c.dir_end);
        bool ok = true;
        if (g.meridian) {
          for (std::size_t i = 1; i + 1 < m && ok; ++i) ok = trial.x[i].x() > 0;
        }
        std::optional<DiscreteHypersurface> surf;
        if (ok) {
          surf = as_surface(cone, g, trial);
          ok = surf.has_value() && !surf->orientation_flipped();
        }
        if (!ok) {
          geometric_rejection = true;
          ++rejections;
          tau *= 0.5;
          continue;
        }
        Evaluation trial_ev = evaluate(g, trial);
        if (L.merit(trial_ev.f.area, trial_ev.f.volume) <= merit_old) {
          c = std::move(trial);
          ev = std::move(trial_ev);
          accepted = true;
          break;
        }
        ++rejections;
        tau *= 0.5;
      }
      ++iter;
      if (!accepted) {
        if (geometric_rejection) {
          throw NumericalError("step rejected " + std::to_string(kMaxRejections) +
                               " times in a row (self-intersection or leaving the cone)");
        }
        tau = tau0;
        break;  // stalled at this multiplier
      }
      tau = std::min(tau * 1.5, std::max(tau0, eps));
      const auto G2 = lagrangian_gradient(ev);
      grad_norm = relative_grad(ev, G2);
      if (iter % 25 == 0) {
        c.x = resample(c.x);
        ev = evaluate(g, c);
        ++segment;
      }
      record(ev, grad_norm);
    }

    const double violation = std::abs(V0 - ev.f.volume);
    if (grad_norm < cfg.grad_tolerance && violation / V0 < cfg.volume_tolerance) {
      converged = true;
      break;
    }
    L.lambda = L.multiplier(ev.f.volume);
    if (violation / V0 >= cfg.volume_tolerance && violation > 0.25 * previous_violation) L.mu *= cfg.penalty_growth;
    previous_violation = violation;
    ++segment;
  }

  run.final_surface = as_surface(cone, g, c);
  if (!run.final_surface) throw NumericalError("final iterate is not a valid surface");
  run.converged = converged;
  run.perimeter = ev.f.area;
  run.volume = ev.f.volume;
  run.multiplier = L.multiplier(ev.f.volume);
  const auto profile = candidate_profile(cone, V0);
  run.best_candidate_gap = (run.perimeter - profile.winner_perimeter) / profile.winner_perimeter;
  if (!converged) run.warnings.push_back("did not converge within max_iterations");
  return run;
}

int default_thread_count() {
  const char* env = std::getenv("CONE_ISO_THREADS");
  int n = 0;
  if (env != nullptr) {
    try {
      n = std::stoi(env);
    } catch (const std::exception&) {
      throw ValidationError("CONE_ISO_THREADS must be a non-negative integer");
    }
    if (n < 0) throw ValidationError("CONE_ISO_THREADS must be a non-negative integer");
  }
  if (n == 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return n;
}

namespace {

// Runs job(i) for i in [0, count) on up to `threads` workers.
template <typename Job>
void parallel_for(int count, int threads, Job job) {
  if (threads <= 0) threads = default_thread_count();
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) job(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

OptimizationRun minimize(const ConeSpec& cone, const OptimizationConfig& config, int threads) {
  config.validate();
  geometry_of(cone);
  std::vector<std::optional<OptimizationRun>> runs(config.restarts);
  std::vector<std::string> errors(config.restarts);
  parallel_for(config.restarts, threads, [&](int i) {
    const Initializer init = i == 0 ? config.initializer : Initializer::RandomBlob;
    try {
      runs[i] = minimize_single(cone, config, init, i);
    } catch (const NumericalError& e) {
      errors[i] = e.what();
    }
  });
  int best = -1;
  for (int i = 0; i < config.restarts; ++i) {
    if (!runs[i]) continue;
    if (best < 0) {
      best = i;
      continue;
    }
    const auto& a = *runs[i];
    const auto& b = *runs[best];
    if ((a.converged && !b.converged) || (a.converged == b.converged && a.perimeter < b.perimeter)) best = i;
  }
  if (best < 0) throw NumericalError("every restart failed: " + errors.front());
  OptimizationRun out = std::move(*runs[best]);
  out.restart_perimeters.clear();
  for (int i = 0; i < config.restarts; ++i) {
    out.restart_perimeters.push_back(runs[i] ? runs[i]->perimeter : std::numeric_limits<double>::quiet_NaN());
    if (!errors[i].empty()) out.warnings.push_back("restart " + std::to_string(i) + " failed: " + errors[i]);
  }
  return out;
}

StationarityReport stationarity_report(const OptimizationRun& run) {
  if (!run.final_surface) throw ValidationError("run has no final surface");
  const auto q = quantities(*run.final_surface);
  StationarityReport r;
  r.mean_curvature = mean_curvature(q);
  r.curvature_spread = curvature_spread(q);
  r.contact_angle_residual = contact_angle_residual(q);
  const double nH = q.n * r.mean_curvature;
  r.multiplier_vs_H_gap = std::abs(run.multiplier - nH) / std::abs(nH);
  r.warning = !run.converged;
  return r;
}

std::string trace_csv(const OptimizationRun& run) {
  std::string out = "iter,perimeter,volume,grad_norm,contact_residual,curvature_spread\n";
  for (const auto& t : run.trace) {
    out += csv_line({std::to_string(t.iter), format_double(t.perimeter), format_double(t.volume),
                     format_double(t.grad_norm), format_double(t.contact_residual), format_double(t.curvature_spread)});
    out += '\n';
  }
  return out;
}

json run_report_json(const OptimizationRun& run) {
  json j;
  j["cone"] = cone_to_json(run.cone);
  j["config"] = to_json(run.config);
  j["converged"] = run.converged;
  j["iterations"] = run.trace.empty() ? 0 : run.trace.back().iter;
  j["perimeter"] = run.perimeter;
  j["volume"] = run.volume;
  j["multiplier"] = run.multiplier;
  j["best_candidate_gap"] = run.best_candidate_gap;
  j["restart_index"] = run.restart_index;
  json per = json::array();
  for (double p : run.restart_perimeters) per.push_back(std::isnan(p) ? json(nullptr) : json(p));
  j["restart_perimeters"] = per;
  j["warnings"] = run.warnings;
  if (run.final_surface) {
    const auto s = stationarity_report(run);
    j["stationarity"] = {{"curvature_spread", s.curvature_spread},
                         {"contact_angle_residual", s.contact_angle_residual},
                         {"multiplier_vs_H_gap", s.multiplier_vs_H_gap},
                         {"mean_curvature", s.mean_curvature},
                         {"warning", s.warning}};
  }
  return j;
}

SweepResult profile_sweep(const ConeSpec& cone, const std::vector<double>& volumes, const OptimizationConfig& config,
                          int threads) {
  for (double v : volumes) {
    if (!(v > 0)) throw ValidationError("volume must be positive");
  }
  geometry_of(cone);
  SweepResult out;
  out.rows.resize(volumes.size());
  const int n = cone.n();
  parallel_for(static_cast<int>(volumes.size()), threads, [&](int i) {
    SweepRow& row = out.rows[i];
    row.volume = volumes[i];
    row.perimeter_candidate = candidate_profile(cone, volumes[i]).winner_perimeter;
    OptimizationConfig c = config;
    c.target_volume = volumes[i];
    try {
      // restarts run sequentially inside a row; rows are the parallel unit
      const auto run = minimize(cone, c, 1);
      row.perimeter_numerical = run.perimeter;
      row.converged = run.converged;
      row.failed = false;
      row.gap = (run.perimeter - row.perimeter_candidate) / row.perimeter_candidate;
    } catch (const std::exception& e) {
      row.failed = true;
      row.converged = false;
      row.error = e.what();
      row.perimeter_numerical = row.gap = std::numeric_limits<double>::quiet_NaN();
    }
  });
  const double p = (n + 1.0) / n;
  double sxy = 0, sxx = 0;
  for (const auto& r : out.rows) {
    if (r.failed) continue;
    sxy += r.volume * std::pow(r.perimeter_numerical, p);
    sxx += r.volume * r.volume;
  }
  out.fitted_slope = sxx > 0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
  out.linearity_residual = 0;
  for (const auto& r : out.rows) {
    if (r.failed) continue;
    const double fit = out.fitted_slope * r.volume;
    out.linearity_residual = std::max(out.linearity_residual, std::abs(std::pow(r.perimeter_numerical, p) - fit) / fit);
  }
  return out;
}

std::string sweep_csv(const SweepResult& s) {
  std::string out = "volume,perimeter_numerical,perimeter_candidate,gap,converged,error\n";
  for (const auto& r : s.rows) {
    out += csv_line({format_double(r.volume), format_double(r.perimeter_numerical), format_double(r.perimeter_candidate),
                     format_double(r.gap), r.converged ? "true" : "false", r.error});
    out += '\n';
  }
  return out;
}

}  // namespace coneiso
