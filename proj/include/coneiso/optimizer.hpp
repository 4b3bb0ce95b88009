#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coneiso/io.hpp"
#include "coneiso/surface.hpp"

namespace coneiso {

enum class Initializer { VertexCap, BoundaryHalfBall, RandomBlob };
std::string to_string(Initializer i);
Initializer initializer_from_string(const std::string& s);

/// Settings of one constrained minimization. Step size and penalty are
/// dimensionless: the step is measured in units of r_ref^2 and the penalty in
/// units of P / V^2, where r_ref is the vertex-ball radius of the target
/// volume.
struct OptimizationConfig {
  double target_volume = 1.0;
  double step_size = 0.05;
  int max_iterations = 5000;
  double grad_tolerance = 1e-4;
  double volume_tolerance = 1e-4;  // relative
  double penalty_initial = 10.0;
  double penalty_growth = 4.0;
  int resolution = 200;  // vertex count
  int restarts = 3;
  std::uint64_t rng_seed = 1;
  Initializer initializer = Initializer::VertexCap;

  void validate() const;
};

json to_json(const OptimizationConfig& c);
/// Overlays the keys of `j` on `base`; unknown keys and type mismatches throw
/// ValidationError naming the key path (prefixed by `path`).
OptimizationConfig config_from_json(const json& j, OptimizationConfig base = {}, const std::string& path = "");

struct TraceRow {
  int iter;
  double perimeter;
  double volume;
  double grad_norm;
  double contact_residual;
  double curvature_spread;
  // not exported to CSV
  double merit;
  double multiplier;
  int segment;  // steps with equal segment share multiplier, penalty and parametrization
};

struct OptimizationRun {
  OptimizationConfig config;
  ConeSpec cone;
  std::vector<TraceRow> trace;
  std::optional<DiscreteHypersurface> final_surface;
  bool converged = false;
  double perimeter = 0;
  double volume = 0;
  double multiplier = 0;  // final Lagrange multiplier, approximates n H
  double best_candidate_gap = 0;
  int restart_index = 0;
  std::vector<double> restart_perimeters;  // NaN for failed restarts
  std::vector<std::string> warnings;
};

/// Runs `config.restarts` independent descents (restart 0 from the configured
/// initializer, the others from RandomBlob) and returns the best by final
/// perimeter, preferring converged runs. Restarts run concurrently on up to
/// `threads` workers (0 = hardware concurrency).
OptimizationRun minimize(const ConeSpec& cone, const OptimizationConfig& config, int threads = 0);

/// One descent from one initializer with an explicit restart index (which
/// seeds the RNG stream).
OptimizationRun minimize_single(const ConeSpec& cone, const OptimizationConfig& config, Initializer init,
                                int restart_index);

struct StationarityReport {
  double curvature_spread;
  double contact_angle_residual;
  double multiplier_vs_H_gap;  // |lambda - n mean H| / (n mean H)
  double mean_curvature;
  bool warning;  // run did not converge
};
StationarityReport stationarity_report(const OptimizationRun& run);

std::string trace_csv(const OptimizationRun& run);
json run_report_json(const OptimizationRun& run);

struct SweepRow {
  double volume;
  double perimeter_numerical;
  double perimeter_candidate;
  double gap;
  bool converged;
  bool failed;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double fitted_slope;          // least-squares P^{(n+1)/n} = slope * V
  double linearity_residual;    // max relative deviation from the fit
};

SweepResult profile_sweep(const ConeSpec& cone, const std::vector<double>& volumes, const OptimizationConfig& config,
                          int threads = 0);
std::string sweep_csv(const SweepResult& s);

/// Worker count from CONE_ISO_THREADS (0 or unset = hardware concurrency).
int default_thread_count();

}  // namespace coneiso
