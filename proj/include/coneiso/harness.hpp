#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "coneiso/io.hpp"
#include "coneiso/optimizer.hpp"
#include "coneiso/tolerances.hpp"

namespace coneiso {

inline constexpr const char* kToolVersion = "0.3.1";

/// Everything a command can be configured with from a file. Flat JSON object
/// with the optimizer keys at the top level and an optional "tolerances"
/// object.
struct HarnessConfig {
  OptimizationConfig optimizer;
  Tolerances tolerances;
};

json to_json(const Tolerances& t);
Tolerances tolerances_from_json(const json& j, Tolerances base = {}, const std::string& path = "tolerances");
json to_json(const HarnessConfig& c);
HarnessConfig harness_config_from_json(const json& j, HarnessConfig base = {});

/// Command-line values that override the configuration file.
struct ConfigOverrides {
  std::optional<double> volume;
  std::optional<int> resolution;
  std::optional<std::uint64_t> seed;
  std::optional<int> restarts;
  std::optional<std::string> initializer;
};

/// defaults <- file <- flags. An empty file yields the defaults.
HarnessConfig load_config(const std::optional<std::filesystem::path>& file, const ConfigOverrides& flags = {});

struct ExperimentManifest {
  std::string tool_version;
  std::string timestamp;  // UTC ISO-8601
  std::string command;
  json cone;
  json parameters;
  std::vector<std::string> outputs;  // relative to the output directory
  std::vector<std::string> checksums;
};

json to_json(const ExperimentManifest& m);

/// Hashes every output, then writes manifest.json atomically into `dir`.
ExperimentManifest write_manifest(const std::filesystem::path& dir, const std::string& command, const json& cone,
                                  const json& parameters, const std::vector<std::string>& outputs);

/// Stable identifier of a run configuration (first 16 hex digits of the
/// SHA-256 of its canonical JSON).
std::string run_id(const json& canonical);

/// Parses and executes one command. `args` excludes the program name.
/// Returns 0 on success, 2 on invalid input, 1 on internal failure;
/// diagnostics go to `err` as a single line.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace coneiso
