// Randomized checks of the scaling and comparison laws.
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "coneiso/candidates.hpp"
#include "coneiso/stability.hpp"
#include "coneiso/surface.hpp"

using namespace coneiso;
using doctest::Approx;
constexpr double pi = std::numbers::pi;

namespace {

std::vector<ConeSpec> random_cones(std::mt19937_64& rng, int count) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::vector<ConeSpec> cones;
  for (int i = 0; i < count; ++i) {
    switch (i % 4) {
      case 0:
        cones.push_back(ConeSpec::sector(2 * pi * u(rng)));
        break;
      case 1:
        cones.push_back(ConeSpec::circular(pi * u(rng)));
        break;
      case 2:
        cones.push_back(ConeSpec::circular(pi * u(rng), 3 + i % 4));
        break;
      default: {
        Eigen::VectorXd a(3), b(3), c(3), d(3);
        a << 1, 0, u(rng);
        b << 0, 1, u(rng);
        c << -1, 0, 1 + u(rng);
        d << 0, -1, 1 + u(rng);
        cones.push_back(ConeSpec::polyhedral({a.normalized(), b.normalized(), c.normalized(), d.normalized()}));
      }
    }
  }
  return cones;
}

}  // namespace

TEST_CASE("winner perimeter follows the power law") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> lv(-3, 3);
  for (const auto& cone : random_cones(rng, 16)) {
    const int n = cone.n();
    const double e = (n + 1.0) / n;
    const double slope = std::pow(candidate_profile(cone, 1.0).winner_perimeter, e);
    for (int k = 0; k < 10; ++k) {
      const double v = std::exp(lv(rng));
      CHECK(std::pow(candidate_profile(cone, v).winner_perimeter, e) == Approx(slope * v).epsilon(1e-10));
    }
  }
}

TEST_CASE("the winning kind does not depend on the volume") {
  std::mt19937_64 rng(6);
  for (const auto& cone : random_cones(rng, 16)) {
    const Winner w = candidate_profile(cone, 1.0).winner;
    for (double lambda : {0.1, 0.5, 2.0, 7.0}) {
      CHECK(candidate_profile(cone, std::pow(lambda, cone.n() + 1)).winner == w);
    }
  }
}

TEST_CASE("half-space profile bounds every cone") {
  std::mt19937_64 rng(7);
  for (const auto& cone : random_cones(rng, 24)) {
    for (double v : {0.01, 1.0, 50.0}) {
      const auto p = candidate_profile(cone, v);
      CHECK(p.winner_perimeter <= p.halfspace_profile * (1 + 1e-12));
      const bool wide = solid_angle(cone) >= sphere_measure(cone.n()) / 2 * (1 - 1e-12);
      CHECK((std::abs(p.winner_perimeter - p.halfspace_profile) <= 1e-12 * p.halfspace_profile) == wide);
    }
  }
}

TEST_CASE("vertex-ball profile constant and the subtended-cone identity") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ur(0.1, 10);
  for (const auto& cone : random_cones(rng, 16)) {
    const int n = cone.n();
    const double omega = solid_angle(cone);
    const double r = ur(rng);
    const auto b = vertex_ball(cone, r);
    CHECK(ball_profile(omega, n, b.volume) == Approx(b.perimeter).epsilon(1e-12));
    CHECK(b.perimeter == Approx((n + 1) * b.volume / r).epsilon(1e-12));
  }
}

TEST_CASE("wall curvature sign agrees with convexity") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ua(0.05, pi - 0.05), us(0.1, 10), uphi(0, 2 * pi);
  for (int i = 0; i < 50; ++i) {
    const double alpha = ua(rng), s = us(rng), phi = uphi(rng);
    const auto cone = ConeSpec::circular(alpha);
    Eigen::VectorXd x(3), v(3);
    x << s * std::sin(alpha) * std::cos(phi), s * std::sin(alpha) * std::sin(phi), s * std::cos(alpha);
    v << -std::sin(phi), std::cos(phi), 0;
    const double k = boundary_II(cone, boundary_point(cone, x), v);
    CHECK((k >= -1e-12) == is_convex(cone));
  }
}

TEST_CASE("discrete measures scale exactly") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> ur(0.5, 2.0);
  const auto cone = ConeSpec::sector(2.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Eigen::Vector2d> pts;
    const int m = 12;
    for (int i = 0; i <= m; ++i) {
      const double phi = 2.0 * i / m;
      const double r = (i == 0 || i == m) ? 1.0 : ur(rng);
      pts.push_back(r * Eigen::Vector2d(std::cos(phi), std::sin(phi)));
    }
    pts.back() = Eigen::Vector2d(std::cos(2.0), std::sin(2.0));
    const auto s = DiscreteHypersurface::polyline(cone, pts);
    const auto q = quantities(s);
    for (double lambda : {0.5, 2.0, 10.0}) {
      const auto t = s.scaled(lambda);
      const auto qt = quantities(t);
      CHECK(area(t) == Approx(lambda * area(s)).epsilon(1e-13));
      CHECK(enclosed_volume(t) == Approx(lambda * lambda * enclosed_volume(s)).epsilon(1e-13));
      for (std::size_t i = 0; i < q.position.size(); ++i) {
        CHECK(qt.mean_curvature[i] == Approx(q.mean_curvature[i] / lambda).epsilon(1e-11));
      }
    }
  }
}

TEST_CASE("closed polylines satisfy the discrete first Minkowski formula") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> ur(0.6, 1.4);
  const auto cone = ConeSpec::sector(pi / 2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Eigen::Vector2d> pts;
    const int m = 9 + trial;
    for (int i = 0; i < m; ++i) {
      const double phi = 2 * pi * i / m;
      pts.push_back(Eigen::Vector2d(3, 3) + ur(rng) * Eigen::Vector2d(std::cos(phi), std::sin(phi)));
    }
    const auto s = DiscreteHypersurface::polyline(cone, pts, true);
    CHECK(minkowski1_pointwise_residual(quantities(s)) <= 1e-10);
  }
}
