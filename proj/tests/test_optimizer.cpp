#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "coneiso/candidates.hpp"
#include "coneiso/errors.hpp"
#include "coneiso/optimizer.hpp"
#include "coneiso/stability.hpp"

using namespace coneiso;
using doctest::Approx;
constexpr double pi = std::numbers::pi;

namespace {

OptimizationConfig single(double volume) {
  OptimizationConfig c;
  c.target_volume = volume;
  c.restarts = 1;
  return c;
}

double vertex_radius(const ConeSpec& cone, double volume) {
  const int n = cone.n();
  return std::pow((n + 1) * volume / solid_angle(cone), 1.0 / (n + 1));
}

}  // namespace

TEST_CASE("configuration validation") {
  OptimizationConfig c;
  CHECK_NOTHROW(c.validate());
  c.target_volume = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.target_volume = -1;
  CHECK_THROWS_AS(minimize(ConeSpec::sector(1.0), c), ValidationError);
  c = {};
  c.resolution = 3;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.restarts = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.step_size = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("configuration JSON") {
  OptimizationConfig c;
  c.resolution = 123;
  c.initializer = Initializer::RandomBlob;
  c.rng_seed = 0xfedcba9876543210ull;
  const auto back = config_from_json(to_json(c));
  CHECK(back.resolution == 123);
  CHECK(back.initializer == Initializer::RandomBlob);
  CHECK(back.rng_seed == c.rng_seed);

  const auto partial = config_from_json(json::parse(R"({"step_size": 0.02})"));
  CHECK(partial.step_size == 0.02);
  CHECK(partial.resolution == OptimizationConfig{}.resolution);

  try {
    config_from_json(json::parse(R"({"resolutoin": 400})"));
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("resolutoin") != std::string::npos);
  }
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"resolution": "many"})")), ValidationError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"initializer": "Sphere"})")), ValidationError);
}

TEST_CASE("unsupported cones") {
  Eigen::VectorXd a(3), b(3), c(3);
  a << 1, 0, 0;
  b << 0, 1, 0;
  c << 0, 0, 1;
  CHECK_THROWS_AS(minimize(ConeSpec::polyhedral({a, b, c}), single(1.0)), ValidationError);
  CHECK_THROWS_AS(minimize(ConeSpec::circular(1.0, 4), single(1.0)), ValidationError);
}

TEST_CASE("quarter plane converges to the vertex arc") {
  const auto run = minimize(ConeSpec::sector(pi / 2), single(pi / 4), 1);
  CHECK(run.converged);
  CHECK(run.perimeter == Approx(pi / 2).epsilon(0.01));
  CHECK(std::abs(run.volume - pi / 4) / (pi / 4) <= run.config.volume_tolerance);
  const auto st = stationarity_report(run);
  CHECK(st.curvature_spread <= 0.02);
  CHECK(st.contact_angle_residual <= 1e-2);
  CHECK(st.multiplier_vs_H_gap <= 0.02);
  CHECK_FALSE(st.warning);
  CHECK(run.best_candidate_gap <= 0.01);
}

TEST_CASE("half-planes and half-spaces converge to half-balls") {
  for (const auto& cone : {ConeSpec::half_space(2), ConeSpec::half_space(3)}) {
    OptimizationConfig c = single(1.0);
    c.initializer = Initializer::BoundaryHalfBall;
    const auto run = minimize(cone, c, 1);
    CHECK(run.converged);
    CHECK(run.perimeter == Approx(halfspace_profile(cone.n(), 1.0)).epsilon(0.01));
    CHECK(stationarity_report(run).multiplier_vs_H_gap <= 0.02);
    CHECK(classify(*run.final_surface) == Verdict::BoundaryHalfSphereOnFlatPiece);
  }
}

TEST_CASE("merit decreases at fixed multiplier") {
  OptimizationConfig c = single(1.0);
  c.initializer = Initializer::RandomBlob;
  for (const auto& cone : {ConeSpec::sector(1.2), ConeSpec::circular(pi / 4)}) {
    const auto run = minimize(cone, c, 1);
    REQUIRE(run.trace.size() > 2);
    for (std::size_t i = 1; i < run.trace.size(); ++i) {
      if (run.trace[i].segment == run.trace[i - 1].segment) {
        CHECK(run.trace[i].merit <= run.trace[i - 1].merit + 1e-12 * std::abs(run.trace[i - 1].merit));
      }
    }
  }
}

TEST_CASE("final surfaces stay near the vertex") {
  OptimizationConfig c = single(0.7);
  c.initializer = Initializer::RandomBlob;
  for (const auto& cone : {ConeSpec::sector(2.0), ConeSpec::circular(pi / 3)}) {
    const auto run = minimize(cone, c, 1);
    const double bound = 5 * vertex_radius(cone, c.target_volume);
    for (const auto& v : run.final_surface->curve_vertices()) CHECK(v.norm() <= bound);
  }
}

TEST_CASE("scaling equivariance") {
  const auto cone = ConeSpec::circular(pi / 4);
  const auto base = minimize(cone, single(0.5), 1);
  for (double lambda : {0.5, 3.0}) {
    const auto scaled = minimize(cone, single(std::pow(lambda, 3) * 0.5), 1);
    CHECK(scaled.perimeter == Approx(lambda * lambda * base.perimeter).epsilon(1e-3));
  }
}

TEST_CASE("runs are deterministic and independent of the worker count") {
  OptimizationConfig c;
  c.target_volume = 1.0;
  c.restarts = 3;
  c.rng_seed = 42;
  const auto cone = ConeSpec::sector(2.5);
  const auto a = minimize(cone, c, 1);
  const auto b = minimize(cone, c, 1);
  const auto d = minimize(cone, c, 3);
  CHECK(trace_csv(a) == trace_csv(b));
  CHECK(trace_csv(a) == trace_csv(d));
  CHECK(a.restart_index == d.restart_index);
  c.restarts = 1;
  c.initializer = Initializer::RandomBlob;
  const auto blob = minimize(cone, c, 1);
  c.rng_seed = 43;
  CHECK(trace_csv(minimize(cone, c, 1)) != trace_csv(blob));
}

TEST_CASE("trace export") {
  const auto run = minimize(ConeSpec::sector(1.0), single(1.0), 1);
  std::istringstream in(trace_csv(run));
  std::string line;
  std::getline(in, line);
  CHECK(line == "iter,perimeter,volume,grad_norm,contact_residual,curvature_spread");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == run.trace.size());
  const json report = run_report_json(run);
  CHECK(report["converged"] == run.converged);
  CHECK(report.contains("stationarity"));
}

TEST_CASE("sweep on the quarter plane") {
  const auto s = profile_sweep(ConeSpec::sector(pi / 2), {0.25, 0.5, 1, 2}, single(1.0), 1);
  CHECK(s.fitted_slope == Approx(pi).epsilon(0.02));
  CHECK(s.linearity_residual <= 1e-3);
  for (const auto& row : s.rows) {
    CHECK_FALSE(row.failed);
    CHECK(row.gap <= 0.01);
  }
  CHECK(sweep_csv(s).rfind("volume,perimeter_numerical,perimeter_candidate,gap,converged,error\n", 0) == 0);
}

TEST_CASE("sweep on a nonconvex sector stays within the candidate bands") {
  OptimizationConfig c = single(1.0);
  c.restarts = 3;
  const auto s = profile_sweep(ConeSpec::sector(3 * pi / 2), {0.5, 2.0}, c, 1);
  for (const auto& row : s.rows) {
    CHECK_FALSE(row.failed);
    CHECK(row.perimeter_numerical >= row.perimeter_candidate * (1 - 1e-3));
    CHECK(row.perimeter_numerical <= halfspace_profile(1, row.volume) * (1 + 1e-3));
  }
}

TEST_CASE("initializer names") {
  for (auto i : {Initializer::VertexCap, Initializer::BoundaryHalfBall, Initializer::RandomBlob}) {
    CHECK(initializer_from_string(to_string(i)) == i);
  }
  CHECK_THROWS_AS(initializer_from_string("Cube"), ValidationError);
}
