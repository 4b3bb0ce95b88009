#include <doctest.h>

#include <cmath>
#include <numbers>

#include "coneiso/cone.hpp"
#include "coneiso/errors.hpp"
#include "coneiso/io.hpp"

using namespace coneiso;
using doctest::Approx;
constexpr double pi = std::numbers::pi;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(xs.size());
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// Point on the round-cone wall at distance s from the vertex, azimuth phi.
Eigen::VectorXd wall_point(double alpha, double s, double phi = 0) {
  return vec({s * std::sin(alpha) * std::cos(phi), s * std::sin(alpha) * std::sin(phi), s * std::cos(alpha)});
}

}  // namespace

TEST_CASE("solid angle of the basic families") {
  CHECK(solid_angle(ConeSpec::sector(pi)) == Approx(pi).epsilon(1e-14));
  CHECK(solid_angle(ConeSpec::circular(pi / 2)) == Approx(2 * pi).epsilon(1e-14));
  CHECK(solid_angle(ConeSpec::circular(pi / 3)) == Approx(pi).epsilon(1e-14));
  CHECK(solid_angle(ConeSpec::half_space(2)) == sphere_measure(1) / 2);
  CHECK(solid_angle(ConeSpec::half_space(3)) == sphere_measure(2) / 2);
}

TEST_CASE("solid angle is linear in theta and increasing in alpha") {
  const double base = solid_angle(ConeSpec::sector(0.3));
  for (double t : {0.6, 1.2, 2.5, 5.0}) CHECK(solid_angle(ConeSpec::sector(t)) == Approx(base * t / 0.3).epsilon(1e-13));
  double prev = 0;
  for (double a = 0.1; a < pi; a += 0.2) {
    const double w = solid_angle(ConeSpec::circular(a));
    CHECK(w > prev);
    prev = w;
  }
}

TEST_CASE("polyhedral octant has an eighth of the sphere") {
  const auto octant = ConeSpec::polyhedral({vec({1, 0, 0}), vec({0, 1, 0}), vec({0, 0, 1})});
  const auto est = solid_angle_estimate(octant);
  CHECK(est.value == Approx(pi / 2).epsilon(1e-12));
  CHECK(est.error_bound <= 1e-6 * est.value);
  CHECK(is_convex(octant));
}

TEST_CASE("convexity") {
  CHECK(is_convex(ConeSpec::sector(pi / 2)));
  CHECK(is_convex(ConeSpec::sector(pi)));
  CHECK_FALSE(is_convex(ConeSpec::sector(3 * pi / 2)));
  CHECK(is_convex(ConeSpec::circular(pi / 3)));
  CHECK_FALSE(is_convex(ConeSpec::circular(2 * pi / 3)));
  CHECK(is_convex(ConeSpec::half_space(3)));
}

TEST_CASE("second fundamental form of the wall") {
  const auto flat = ConeSpec::sector(3 * pi / 2);
  const auto p = boundary_point(flat, vec({2, 0}));
  CHECK(boundary_II(flat, p, vec({1, 0})) == Approx(0.0));

  const auto half = ConeSpec::circular(pi / 2);
  const auto q = boundary_point(half, wall_point(pi / 2, 1.5, 0.4));
  CHECK(boundary_II(half, q, vec({-std::sin(0.4), std::cos(0.4), 0})) == Approx(0.0));

  const auto round = ConeSpec::circular(pi / 4);
  const auto r = boundary_point(round, wall_point(pi / 4, 1.0));
  CHECK(boundary_II(round, r, vec({0, 1, 0})) == Approx(1.0).epsilon(1e-12));
  // along the ruling the wall is straight
  CHECK(boundary_II(round, r, wall_point(pi / 4, 1.0)) == Approx(0.0));
}

TEST_CASE("boundary_II sign matches convexity and scales like 1/lambda") {
  for (double alpha : {0.4, 1.0, 2.0, 2.6}) {
    const auto cone = ConeSpec::circular(alpha);
    const auto p = boundary_point(cone, wall_point(alpha, 1.0, 0.7));
    const Eigen::VectorXd v = vec({-std::sin(0.7), std::cos(0.7), 0});
    const double k = boundary_II(cone, p, v);
    CHECK((k >= 0) == is_convex(cone));
    for (double lambda : {0.5, 2.0, 10.0}) {
      const auto pl = boundary_point(cone, wall_point(alpha, lambda, 0.7));
      CHECK(boundary_II(cone, pl, v) == Approx(k / lambda).epsilon(1e-12));
    }
  }
}

TEST_CASE("membership and distance") {
  CHECK(contains(ConeSpec::sector(pi / 2), vec({1, 1})));
  CHECK_FALSE(contains(ConeSpec::sector(pi / 2), vec({-1, 1})));
  const auto round = ConeSpec::circular(pi / 4);
  CHECK(contains(round, vec({0, 0, 1})));
  CHECK(distance_to_boundary(round, vec({0, 0, 1})) == Approx(std::cos(pi / 4)).epsilon(1e-14));
  CHECK(contains(round, vec({0, 0, 0})));
  CHECK(contains(ConeSpec::sector(3 * pi / 2), vec({-1, -0.5})));
}

TEST_CASE("queries at the vertex and off the wall are rejected") {
  const auto round = ConeSpec::circular(pi / 4);
  CHECK_THROWS_AS(boundary_point(round, vec({0, 0, 0})), ValidationError);
  CHECK_THROWS_AS(boundary_point(round, vec({0, 0, 1})), ValidationError);
  const auto octant = ConeSpec::polyhedral({vec({1, 0, 0}), vec({0, 1, 0}), vec({0, 0, 1})});
  CHECK_THROWS_AS(boundary_point(octant, vec({1, 0, 0})), ValidationError);  // edge
  const auto p = boundary_point(round, wall_point(pi / 4, 1.0));
  CHECK_THROWS_AS(boundary_II(round, p, vec({1, 0, 0})), ValidationError);  // not tangent
}

TEST_CASE("invalid cone parameters") {
  CHECK_THROWS_AS(ConeSpec::sector(0), ValidationError);
  CHECK_THROWS_AS(ConeSpec::sector(2 * pi + 0.1), ValidationError);
  CHECK_THROWS_AS(ConeSpec::circular(-0.1), ValidationError);
  CHECK_THROWS_AS(ConeSpec::circular(pi), ValidationError);
  CHECK_THROWS_AS(ConeSpec::polyhedral({vec({1, 0, 0}), vec({-1, 0, 0})}), ValidationError);
}

TEST_CASE("half-space representations agree") {
  const auto h = ConeSpec::half_space(3);
  const auto c = ConeSpec::circular(pi / 2);
  for (const auto& x : {vec({1, 2, 3}), vec({1, -1, -0.2}), vec({0.3, 0, 0})}) {
    CHECK(contains(h, x) == contains(c, x));
    CHECK(distance_to_boundary(h, x) == Approx(distance_to_boundary(c, x)).epsilon(1e-14));
  }
  CHECK(is_half_space(c));
  CHECK(is_half_space(ConeSpec::sector(pi)));
}

TEST_CASE("cone JSON round trip") {
  for (const auto& cone : {ConeSpec::sector(1.25), ConeSpec::circular(pi / 4), ConeSpec::half_space(3),
                           ConeSpec::polyhedral({vec({1, 0, 0}), vec({0, 1, 0}), vec({0, 0, 1})})}) {
    CHECK(cone_from_json(cone_to_json(cone)) == cone);
  }
  const json j = json::parse(R"({"ambient_dim": 3, "shape": {"kind": "circular", "alpha": 0.7853981633974483}})");
  CHECK(cone_from_json(j) == ConeSpec::circular(pi / 4));
  CHECK_THROWS_AS(cone_from_json(json::parse(R"({"ambient_dim": 3, "shape": {"kind": "cylinder"}})")),
                  ValidationError);
  CHECK_THROWS_AS(cone_from_json(json::parse(R"({"ambient_dim": 2, "shape": {"kind": "sector"}})")),
                  ValidationError);
}
