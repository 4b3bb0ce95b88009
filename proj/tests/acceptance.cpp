// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "coneiso/candidates.hpp"
#include "coneiso/harness.hpp"
#include "coneiso/optimizer.hpp"
#include "coneiso/stability.hpp"
#include "coneiso/surface_builders.hpp"

using namespace coneiso;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome halfspace_oracle() {
  const double e1 = std::abs(halfspace_profile(1, 2 * pi) - 2 * pi);
  const double e2 = std::abs(halfspace_profile(2, 2 * pi / 3) - 2 * pi);
  return {e1 <= 1e-12 && e2 <= 1e-12, fmt("errors %.2e %.2e", e1, e2)};
}

Outcome crossover() {
  bool ok = true;
  std::string seen;
  for (double v : {0.1, 1.0, 10.0}) {
    const Winner below = candidate_profile(ConeSpec::sector(pi - 0.01), v).winner;
    const Winner at = candidate_profile(ConeSpec::sector(pi), v).winner;
    const Winner above = candidate_profile(ConeSpec::sector(pi + 0.01), v).winner;
    ok = ok && below == Winner::Vertex && at == Winner::Tie && above == Winner::HalfBall;
    seen += to_string(below) + "/" + to_string(at) + "/" + to_string(above) + " ";
  }
  return {ok, seen};
}

Outcome scaling_law() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::vector<ConeSpec> cones{ConeSpec::sector(2 * pi * u(rng)), ConeSpec::circular(pi * u(rng) * 0.95),
                              ConeSpec::circular(0.5 * pi * u(rng), 4)};
  Eigen::VectorXd a(3), b(3), c(3);
  a << 1, 0, 0.3 * u(rng);
  b << 0, 1, 0.3 * u(rng);
  c << -1, -1, 1 + u(rng);
  cones.push_back(ConeSpec::polyhedral({a.normalized(), b.normalized(), c.normalized()}));
  cones.push_back(ConeSpec::sector(pi + pi * u(rng)));
  double worst = 0;
  for (const auto& cone : cones) {
    const int n = cone.ambient_dim() - 1;
    const double v = 0.1 + 5 * u(rng);
    const double p = candidate_profile(cone, v).winner_perimeter;
    for (double lambda : {0.5, 2.0, 10.0}) {
      const double scaled = candidate_profile(cone, std::pow(lambda, n + 1) * v).winner_perimeter;
      worst = std::max(worst, std::abs(scaled - std::pow(lambda, n) * p) / (std::pow(lambda, n) * p));
    }
  }
  return {worst <= 1e-10, fmt("5 cones, max relative deviation %.2e", worst)};
}

double segment_distance(const Eigen::Vector2d& x, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d d = b - a;
  const double t = std::clamp((x - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return (a + t * d - x).norm();
}

// Hausdorff distance between a polyline and the arc |x| = r, 0 <= angle <= theta.
double hausdorff_to_arc(const std::vector<Eigen::Vector2d>& pts, double r, double theta) {
  double h = 0;
  for (const auto& p : pts) {
    double phi = std::atan2(p.y(), p.x());
    if (phi < 0) phi += 2 * pi;
    const double d = (phi <= theta) ? std::abs(p.norm() - r)
                                    : std::min((p - Eigen::Vector2d(r, 0)).norm(),
                                               (p - r * Eigen::Vector2d(std::cos(theta), std::sin(theta))).norm());
    h = std::max(h, d);
  }
  for (int k = 0; k <= 2000; ++k) {
    const double phi = theta * k / 2000;
    const Eigen::Vector2d q = r * Eigen::Vector2d(std::cos(phi), std::sin(phi));
    double best = 1e300;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) best = std::min(best, segment_distance(q, pts[i], pts[i + 1]));
    h = std::max(h, best);
  }
  return h;
}

OptimizationConfig quarter_config() {
  OptimizationConfig c;
  c.target_volume = pi / 4;
  c.resolution = 200;
  c.restarts = 3;
  c.rng_seed = 7;
  return c;
}

Outcome optimizer_quarter() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto run = minimize(ConeSpec::sector(pi / 2), quarter_config(), default_thread_count());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double rel = std::abs(run.perimeter - pi / 2) / (pi / 2);
  const double h = hausdorff_to_arc(run.final_surface->curve_vertices(), 1.0, pi / 2);
  return {run.converged && rel <= 0.01 && h <= 0.02 && secs <= 60,
          fmt("P = %.6f (rel %.2e), Hausdorff %.2e, %.1f s", run.perimeter, rel, h, secs)};
}

Outcome nonconvex_sector() {
  OptimizationConfig c;
  c.target_volume = pi / 2;
  c.restarts = 5;
  c.initializer = Initializer::RandomBlob;
  const double theta = 3 * pi / 2;
  const auto run = minimize(ConeSpec::sector(theta), c, default_thread_count());
  const double vertex = theta * std::sqrt(2 * c.target_volume / theta);
  const double rel = std::abs(run.perimeter - pi) / pi;
  const double below = 1 - run.perimeter / vertex;
  return {rel <= 0.02 && below >= 0.15,
          fmt("P = %.6f (rel %.2e), %.1f%% below vertex arc %.4f", run.perimeter, rel, 100 * below, vertex)};
}

Outcome axisymmetric_cone() {
  OptimizationConfig c;
  c.target_volume = pi / 3;
  const auto run = minimize(ConeSpec::circular(pi / 3), c, default_thread_count());
  const auto st = stationarity_report(run);
  const Verdict v = classify(*run.final_surface);
  return {std::abs(st.mean_curvature - 1) <= 0.02 && st.multiplier_vs_H_gap <= 0.02 && v == Verdict::VertexBallCap,
          fmt("mean H %.6f, multiplier gap %.2e, %s", st.mean_curvature, st.multiplier_vs_H_gap,
              to_string(v).c_str())};
}

// Residual sequence over refinement levels 0..4 (each level doubles the resolution).
std::vector<MinkowskiResiduals> minkowski_levels(DiscreteHypersurface s) {
  std::vector<MinkowskiResiduals> out;
  for (int level = 0; level <= 4; ++level) {
    if (level > 0) s = refine(s, 2);
    out.push_back(minkowski_checks(s, quantities(s)));
  }
  return out;
}

bool halves(const std::vector<double>& r) {
  for (std::size_t k = 0; k + 1 < r.size(); ++k) {
    if (r[k + 1] > std::max(r[k] / 2, 1e-12)) return false;
  }
  return true;
}

Outcome minkowski_suite() {
  const std::vector<std::pair<std::string, DiscreteHypersurface>> cases{
      {"arc", vertex_arc(ConeSpec::sector(pi / 2), 1.0, 8)},
      {"arc3", vertex_arc(ConeSpec::sector(pi / 3), 2.0, 8)},
      {"cap", meridian_vertex_cap(ConeSpec::circular(pi / 4), 1.0, 8)},
      {"halfcircle", half_circle_on_ray(ConeSpec::half_space(2), 2.0, 1.0, 8)},
      {"hemisphere", meridian_vertex_cap(ConeSpec::half_space(3), 1.0, 8)},
  };
  bool ok = true;
  double worst = 0;
  for (const auto& [name, s] : cases) {
    const auto levels = minkowski_levels(s);
    std::vector<double> r1, r2;
    for (const auto& m : levels) {
      r1.push_back(m.first);
      r2.push_back(m.second);
    }
    ok = ok && r1.back() <= 1e-6 && r2.back() <= 1e-6 && halves(r1) && halves(r2);
    worst = std::max({worst, r1.back(), r2.back()});
  }
  // triangle meshes, reported only
  const auto mesh = vertex_cap_mesh(ConeSpec::circular(pi / 4), 1.0, 32, 128);
  const auto mm = minkowski_checks(mesh, quantities(mesh));
  return {ok, fmt("curves/meridians level 4 max %.2e; cap mesh level 4: %.2e %.2e", worst, mm.first, mm.second)};
}

Outcome boundary_identity_check() {
  auto cap = meridian_vertex_cap(ConeSpec::circular(pi / 4), 1.0, 8);
  auto arc = vertex_arc(ConeSpec::sector(pi / 2), 1.0, 8);
  auto half = half_circle_on_ray(ConeSpec::half_space(2), 2.0, 1.0, 8);
  cap = refine(cap, 16);
  arc = refine(arc, 16);
  half = refine(half, 16);
  const double r_cap = boundary_identity(cap, quantities(cap));
  const double r_arc = boundary_identity(arc, quantities(arc));
  const double r_half = boundary_identity(half, quantities(half));
  const auto mesh = vertex_cap_mesh(ConeSpec::circular(pi / 4), 1.0, 32, 128);
  const double r_mesh = boundary_identity(mesh, quantities(mesh));
  return {r_cap <= 1e-4 && r_mesh <= 1e-4 && r_arc <= 1e-6 && r_half <= 1e-6,
          fmt("cap %.2e, cap mesh %.2e, sector %.2e, half-plane %.2e", r_cap, r_mesh, r_arc, r_half)};
}

Outcome index_form_consistency() {
  const std::vector<DiscreteHypersurface> caps{
      vertex_arc(ConeSpec::sector(pi / 2), 1.0, 128),
      meridian_vertex_cap(ConeSpec::circular(pi / 4), 1.0, 128),
      vertex_cap_mesh(ConeSpec::circular(pi / 4), 1.0, 32, 128),
      half_circle_on_ray(ConeSpec::half_space(2), 2.0, 1.0, 128),
      hemisphere_on_plane(ConeSpec::half_space(3), 4, 1.0, Eigen::Vector3d(0.3, 0.2, 0)),
  };
  bool ok = true;
  double worst = 0;
  double max_closed = -1e300;
  for (const auto& s : caps) {
    const auto r = analyze(s);
    const double d = std::max(std::abs(r.Q_direct - r.Q_gradient_form), std::abs(r.Q_direct - r.Q_closed)) / r.area;
    worst = std::max(worst, d);
    max_closed = std::max(max_closed, r.Q_closed);
    ok = ok && d <= 1e-3 && r.Q_closed <= 1e-6 + r.consistency_tolerance;
  }
  const auto ellipsoid = meridian_ellipsoid(ConeSpec::circular(pi / 4), 3.0, 1.2, 1.0, 128);
  const double q_ell = analyze(ellipsoid).Q_closed;
  ok = ok && q_ell < -0.05;
  return {ok, fmt("max |dQ|/area %.2e, max Q_closed %.2e, ellipsoid Q_closed %.4f", worst, max_closed, q_ell)};
}

Outcome appendix_derivatives() {
  double worst1 = 0, worst2 = 0;
  for (const auto& cone : {ConeSpec::sector(pi / 2), ConeSpec::circular(pi / 3)}) {
    const auto r = profile_derivative_checks(cone);
    worst1 = std::max(worst1, r.dPdV_residual);
    worst2 = std::max(worst2, r.convexity_residual);
  }
  return {worst1 <= 1e-8 && worst2 <= 1e-8, fmt("dP/dV residual %.2e, second derivative %.2e", worst1, worst2)};
}

Outcome stationarity_detector() {
  const auto arc = tilted_arc(ConeSpec::half_space(2), 1.0, 10 * pi / 180, 64);
  const auto r = analyze(arc);
  return {r.verdict == Verdict::NotStationary && r.minkowski1_residual > 1e-2,
          fmt("%s, minkowski1 %.3e", to_string(r.verdict).c_str(), r.minkowski1_residual)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome reproducibility() {
  const fs::path root = fs::temp_directory_path() / ("cone_iso_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::string cone = R"({"ambient_dim":2,"shape":{"kind":"sector","theta":1.5707963267948966}})";
  std::vector<std::string> traces;
  for (const char* sub : {"a", "b"}) {
    std::ostringstream out, err;
    const int rc = run_command({"minimize", "--cone", cone, "--volume", "0.78539816339744828", "--resolution", "200",
                                "--restarts", "3", "--seed", "7", "--out", (root / sub).string()},
                               out, err);
    if (rc != 0) return {false, "minimize exited with " + std::to_string(rc) + ": " + err.str()};
    for (const auto& e : fs::recursive_directory_iterator(root / sub)) {
      if (e.path().filename() == "trace.csv") traces.push_back(slurp(e.path()));
    }
  }
  fs::remove_all(root);
  const bool same = traces.size() == 2 && !traces[0].empty() && traces[0] == traces[1];
  return {same, fmt("%zu traces, %zu bytes, identical: %s", traces.size(), traces.empty() ? 0 : traces[0].size(),
                    same ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"half-space profile oracle", halfspace_oracle},
      {"candidate crossover at theta = pi", crossover},
      {"scaling law of the winner perimeter", scaling_law},
      {"optimizer on the quarter plane", optimizer_quarter},
      {"nonconvex sector 3pi/2", nonconvex_sector},
      {"axisymmetric convex cone pi/3", axisymmetric_cone},
      {"Minkowski suite", minkowski_suite},
      {"boundary identity", boundary_identity_check},
      {"index-form consistency", index_form_consistency},
      {"profile derivatives", appendix_derivatives},
      {"stationarity detector", stationarity_detector},
      {"reproducible trace", reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %2zu  %-38s %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
