#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "coneiso/candidates.hpp"
#include "coneiso/errors.hpp"
#include "coneiso/stability.hpp"
#include "coneiso/surface_builders.hpp"

using namespace coneiso;
using doctest::Approx;
constexpr double pi = std::numbers::pi;

TEST_CASE("test function vanishes on origin-centered spheres") {
  for (const auto& s : {vertex_arc(ConeSpec::sector(pi / 2), 2.5, 40), vertex_arc(ConeSpec::sector(4.0), 0.3, 40),
                        meridian_vertex_cap(ConeSpec::circular(pi / 3), 1.4, 40)}) {
    for (double u : test_function(s)) CHECK(std::abs(u) <= 1e-8);
  }
}

TEST_CASE("test function of an off-center circle") {
  const Eigen::Vector2d c(1.5, 2.0);
  const double r = 0.5;
  const auto s = closed_circle(ConeSpec::sector(pi / 2), c, r, 200);
  const auto q = quantities(s);
  const auto u = test_function(s);
  double mean = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double expected = (1 / r) * q.normal[i].dot(c);
    CHECK(u[i] == Approx(expected).scale(1.0).epsilon(1e-8));
    mean += u[i] * q.area_weight[i];
  }
  CHECK(std::abs(mean / q.area) <= 1e-8);
}

TEST_CASE("index form vanishes on umbilical caps") {
  const auto interior = icosphere(ConeSpec::half_space(3), 4, 1.0, {0, 0, 3});
  const auto cap = meridian_vertex_cap(ConeSpec::circular(pi / 4), 1.0, 128);
  for (const auto& s : {interior, cap}) {
    const auto q = quantities(s);
    const auto v = index_form(s, q, test_function(s));
    CHECK(std::abs(v.direct) <= 1e-3 * q.area);
    CHECK(std::abs(v.gradient_form) <= 1e-3 * q.area);
  }
}

TEST_CASE("index form is negative on an ellipsoid") {
  const auto e = ellipsoid_mesh(ConeSpec::half_space(3), 4, {1, 1, 1.2}, {0, 0, 3});
  const auto q = quantities(e);
  const auto v = index_form(e, q, test_function(e));
  CHECK(v.direct < 0);
  CHECK(index_form_closed(e, q) < -0.05);
  CHECK(classify(e) == Verdict::NotStable);
}

TEST_CASE("Minkowski formulas") {
  const auto arc = vertex_arc(ConeSpec::sector(1.0), 1.0, 64);
  const auto m = minkowski_checks(arc, quantities(arc));
  CHECK(m.first <= 1e-8);
  CHECK(m.second <= 1e-8);

  const auto half = half_circle_on_ray(ConeSpec::sector(3 * pi / 2), 2.0, 1.0, 200);
  const auto mh = minkowski_checks(half, quantities(half));
  CHECK(mh.first <= 1e-6);
  CHECK(mh.second <= 1e-6);

  const auto tilted = tilted_arc(ConeSpec::half_space(2), 1.0, 10 * pi / 180, 64);
  CHECK(minkowski_checks(tilted, quantities(tilted)).first >= 1e-2);
}

TEST_CASE("pointwise first Minkowski residual on closed polylines") {
  const std::vector<Eigen::Vector2d> pts{{1, 0.2}, {3, 0.5}, {2.5, 2}, {1.8, 1.1}, {0.9, 2.5}};
  const auto s = DiscreteHypersurface::polyline(ConeSpec::sector(pi / 2), pts, true);
  CHECK(minkowski1_pointwise_residual(quantities(s)) <= 1e-10);
  const auto c = closed_circle(ConeSpec::sector(pi / 2), {2, 2}, 1, 17);
  CHECK(minkowski1_pointwise_residual(quantities(c)) <= 1e-10);
}

TEST_CASE("boundary identity") {
  const auto arc = vertex_arc(ConeSpec::sector(pi / 3), 1.0, 64);
  CHECK(boundary_identity(arc, quantities(arc)) <= 1e-6);
  const auto half = meridian_vertex_cap(ConeSpec::half_space(3), 1.0, 64);
  CHECK(boundary_identity(half, quantities(half)) <= 1e-6);
  const auto mesh = vertex_cap_mesh(ConeSpec::circular(pi / 4), 1.0, 32, 128);
  CHECK(boundary_identity(mesh, quantities(mesh)) <= 1e-4);
  const auto tilted = tilted_arc(ConeSpec::half_space(2), 1.0, 10 * pi / 180, 64);
  CHECK_THROWS_AS(boundary_identity(tilted, quantities(tilted)), OrthogonalityViolated);
}

TEST_CASE("II(N, N) vanishes at the contact of a vertex cap") {
  const auto cap = meridian_vertex_cap(ConeSpec::circular(pi / 4), 1.0, 64);
  const auto q = quantities(cap);
  for (double k : boundary_normal_curvatures(cap, q)) CHECK(std::abs(k) <= 1e-12);
}

TEST_CASE("classification") {
  CHECK(classify(meridian_vertex_cap(ConeSpec::circular(pi / 3), 1.0, 64)) == Verdict::VertexBallCap);
  CHECK(classify(vertex_arc(ConeSpec::sector(pi / 2), 1.0, 64)) == Verdict::VertexBallCap);
  CHECK(classify(hemisphere_on_plane(ConeSpec::half_space(3), 4, 1.0, {0.5, -0.3, 0})) ==
        Verdict::BoundaryHalfSphereOnFlatPiece);
  CHECK(classify(half_circle_on_ray(ConeSpec::half_space(2), 2.0, 1.0, 64)) == Verdict::BoundaryHalfSphereOnFlatPiece);
  CHECK(classify(icosphere(ConeSpec::half_space(3), 3, 1.0, {0, 0, 3})) == Verdict::InteriorSphere);
  CHECK(classify(meridian_ellipsoid(ConeSpec::circular(pi / 4), 3.0, 1.2, 1.0, 64)) == Verdict::NotStable);
  CHECK(classify(tilted_arc(ConeSpec::half_space(2), 1.0, 10 * pi / 180, 64)) == Verdict::NotStationary);
  // convexity is needed for the conclusion
  CHECK(classify(half_circle_on_ray(ConeSpec::sector(3 * pi / 2), 2.0, 1.0, 64)) == Verdict::Inconclusive);
}

TEST_CASE("classification is invariant under dilation") {
  const std::vector<DiscreteHypersurface> surfaces{
      meridian_vertex_cap(ConeSpec::circular(pi / 3), 1.0, 64),
      hemisphere_on_plane(ConeSpec::half_space(3), 4, 1.0, {0.5, -0.3, 0}),
      meridian_ellipsoid(ConeSpec::circular(pi / 4), 3.0, 1.2, 1.0, 64),
      tilted_arc(ConeSpec::half_space(2), 1.0, 10 * pi / 180, 64),
      icosphere(ConeSpec::half_space(3), 3, 1.0, {0, 0, 3}),
  };
  for (const auto& s : surfaces) {
    const Verdict v = classify(s);
    for (double lambda : {0.5, 2.0, 10.0}) CHECK(classify(s.scaled(lambda)) == v);
  }
}

TEST_CASE("consistency of the index-form routes improves under refinement") {
  double prev = 1e300;
  for (int k = 0; k < 4; ++k) {
    const int rings = 4 << k;
    const auto s = vertex_cap_mesh(ConeSpec::circular(pi / 4), 1.0, rings, 4 * rings);
    const auto r = analyze(s);
    const double gap = std::abs(r.Q_direct - r.Q_closed);
    CHECK(gap < prev);
    prev = gap;
  }
  CHECK(prev <= 1e-3);
}

TEST_CASE("sign law in convex cones") {
  for (const auto& s : {vertex_arc(ConeSpec::sector(1.2), 1.0, 64),
                        meridian_vertex_cap(ConeSpec::circular(pi / 4), 1.0, 64),
                        vertex_cap_mesh(ConeSpec::circular(pi / 4), 1.0, 16, 64),
                        hemisphere_on_plane(ConeSpec::half_space(3), 4, 1.0, {0, 0, 0}),
                        icosphere(ConeSpec::half_space(3), 3, 1.0, {0, 0, 3})}) {
    const auto r = analyze(s);
    CHECK(r.Q_closed <= 1e-6 + r.consistency_tolerance);
  }
}

TEST_CASE("stationary candidates have positive mean curvature") {
  for (const auto& s : {vertex_arc(ConeSpec::sector(1.2), 3.0, 64),
                        meridian_vertex_cap(ConeSpec::circular(pi / 4), 0.2, 64),
                        half_circle_on_ray(ConeSpec::half_space(2), 2.0, 1.0, 64)}) {
    const auto r = analyze(s);
    CHECK(enclosed_volume(s) > 0);
    CHECK(r.mean_curvature > 0);
  }
}

TEST_CASE("profile derivatives along vertex balls") {
  const auto sector = profile_derivative_checks(ConeSpec::sector(1.3), 1.0);
  CHECK(sector.dPdV == Approx(1.0).epsilon(1e-8));
  CHECK(sector.convexity_residual <= 1e-8);
  const auto round = profile_derivative_checks(ConeSpec::circular(pi / 3), 1.0);
  CHECK(round.dPdV == Approx(2.0).epsilon(1e-8));
  CHECK(round.convexity_residual <= 1e-8);
  const auto cone = ConeSpec::sector(1.0);
  const CandidateFamily shrinking = [&](double r) { return vertex_ball(cone, 1 / r); };
  CHECK_THROWS_AS(profile_derivative_checks(cone, 1.0, 1e-4, shrinking), ValidationError);
}

TEST_CASE("report serialization") {
  const auto r = analyze(meridian_vertex_cap(ConeSpec::circular(pi / 3), 1.0, 32));
  const json j = to_json(r);
  for (const char* key : {"Q_direct", "Q_gradient_form", "Q_closed", "minkowski1_residual", "minkowski2_residual",
                          "boundary_identity_residual", "verdict", "diagnostics", "resolution"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["resolution"]["vertex_count"] == 33);
  CHECK(j["verdict"] == "VertexBallCap");
  const std::string table = render_table(r);
  CHECK(table.find("verdict") != std::string::npos);
  CHECK(table.find("VertexBallCap") != std::string::npos);
}
