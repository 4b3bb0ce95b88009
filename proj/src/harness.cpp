#include "coneiso/harness.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "coneiso/candidates.hpp"
#include "coneiso/errors.hpp"
#include "coneiso/stability.hpp"
#include "coneiso/surface.hpp"

namespace coneiso {

namespace fs = std::filesystem;

json to_json(const Tolerances& t) {
  return json{{"geometric", t.geometric},       {"surface_boundary", t.surface_boundary},
              {"unit_length", t.unit_length},   {"tie", t.tie},
              {"stationarity", t.stationarity}, {"umbilicity", t.umbilicity},
              {"sphere_fit", t.sphere_fit},     {"profile_gap", t.profile_gap}};
}

Tolerances tolerances_from_json(const json& j, Tolerances t, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    double* slot = nullptr;
    if (k == "geometric") slot = &t.geometric;
    if (k == "surface_boundary") slot = &t.surface_boundary;
    if (k == "unit_length") slot = &t.unit_length;
    if (k == "tie") slot = &t.tie;
    if (k == "stationarity") slot = &t.stationarity;
    if (k == "umbilicity") slot = &t.umbilicity;
    if (k == "sphere_fit") slot = &t.sphere_fit;
    if (k == "profile_gap") slot = &t.profile_gap;
    if (slot == nullptr) throw ValidationError("unknown configuration key '" + path + "." + k + "'");
    if (!v.is_number()) throw ValidationError(path + "." + k + ": expected a number");
    *slot = v.get<double>();
    if (!(*slot >= 0)) throw ValidationError(path + "." + k + ": must be non-negative");
  }
  return t;
}

json to_json(const HarnessConfig& c) {
  json j = to_json(c.optimizer);
  j["tolerances"] = to_json(c.tolerances);
  return j;
}

HarnessConfig harness_config_from_json(const json& j, HarnessConfig base) {
  if (!j.is_object()) throw ValidationError("config: expected a JSON object");
  json opt = json::object();
  for (const auto& [k, v] : j.items()) {
    if (k == "tolerances") {
      base.tolerances = tolerances_from_json(v, base.tolerances);
    } else {
      opt[k] = v;
    }
  }
  base.optimizer = config_from_json(opt, base.optimizer);
  return base;
}

HarnessConfig load_config(const std::optional<fs::path>& file, const ConfigOverrides& flags) {
  HarnessConfig c;
  if (file) {
    std::ifstream in(*file, std::ios::binary);
    if (!in) throw ValidationError("cannot read config file '" + file->string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
      json j;
      try {
        j = json::parse(text);
      } catch (const json::parse_error& e) {
        throw ValidationError("malformed config file '" + file->string() + "': " + e.what());
      }
      c = harness_config_from_json(j, c);
    }
  }
  if (flags.volume) c.optimizer.target_volume = *flags.volume;
  if (flags.resolution) c.optimizer.resolution = *flags.resolution;
  if (flags.seed) c.optimizer.rng_seed = *flags.seed;
  if (flags.restarts) c.optimizer.restarts = *flags.restarts;
  if (flags.initializer) c.optimizer.initializer = initializer_from_string(*flags.initializer);
  return c;
}

json to_json(const ExperimentManifest& m) {
  json checks = json::object();
  for (std::size_t i = 0; i < m.outputs.size(); ++i) checks[m.outputs[i]] = m.checksums[i];
  return json{{"tool_version", m.tool_version}, {"timestamp", m.timestamp}, {"command", m.command},
              {"cone", m.cone},                 {"parameters", m.parameters}, {"outputs", m.outputs},
              {"checksums", checks}};
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

}  // namespace

ExperimentManifest write_manifest(const fs::path& dir, const std::string& command, const json& cone,
                                  const json& parameters, const std::vector<std::string>& outputs) {
  ExperimentManifest m{kToolVersion, utc_timestamp(), command, cone, parameters, outputs, {}};
  for (const auto& rel : outputs) m.checksums.push_back(sha256_file(dir / rel));
  write_file_atomic(dir / "manifest.json", to_json(m).dump(2) + "\n");
  return m;
}

std::string run_id(const json& canonical) { return sha256_hex(canonical.dump()).substr(0, 16); }

namespace {

struct Options {
  std::string cone;
  std::string out;
  std::vector<double> volumes;
  std::string surface;
  std::string config;
  std::optional<double> volume;
  std::optional<int> resolution;
  std::optional<std::uint64_t> seed;
  std::optional<int> restarts;
  std::optional<std::string> initializer;
};

// Collects files for one command and writes the manifest last.
class Output {
 public:
  Output(const Options& o, std::string command, json cone) : command_(std::move(command)), cone_(std::move(cone)) {
    if (!o.out.empty()) dir_ = fs::path(o.out);
  }

  bool enabled() const { return dir_.has_value(); }

  void write(const std::string& rel, const std::string& content) {
    if (!dir_) return;
    write_file_atomic(*dir_ / rel, content);
    files_.push_back(rel);
  }

  void finish(const json& parameters) {
    if (dir_) write_manifest(*dir_, command_, cone_, parameters, files_);
  }

 private:
  std::string command_;
  json cone_;
  std::optional<fs::path> dir_;
  std::vector<std::string> files_;
};

void require_positive_volumes(const std::vector<double>& vs) {
  for (double v : vs) {
    if (!(v > 0) || !std::isfinite(v)) throw ValidationError("volume must be positive");
  }
}

std::vector<double> volume_list(const Options& o) {
  std::vector<double> vs = o.volumes;
  if (o.volume) vs.insert(vs.begin(), *o.volume);
  if (vs.empty()) throw ValidationError("no volume given (use --volume or --volumes)");
  require_positive_volumes(vs);
  return vs;
}

HarnessConfig config_of(const Options& o) {
  ConfigOverrides f{o.volume, o.resolution, o.seed, o.restarts, o.initializer};
  return load_config(o.config.empty() ? std::nullopt : std::optional<fs::path>(o.config), f);
}

ConeSpec load_cone(const Options& o) {
  if (o.cone.empty()) throw ValidationError("--cone is required");
  return cone_from_json(parse_json_argument(o.cone));
}

std::string profile_csv(const ConeSpec& cone, const std::vector<double>& vs, const Tolerances& tol) {
  std::string csv = candidate_profile_csv_header() + "\n";
  for (double v : vs) csv += candidate_profile_csv_row(candidate_profile(cone, v, tol)) + "\n";
  return csv;
}

json candidate_json(const CandidateRegion& c) {
  std::vector<double> center(c.center.data(), c.center.data() + c.center.size());
  return json{{"kind", to_string(c.kind)}, {"radius", c.radius},         {"center", center},
              {"perimeter", c.perimeter},  {"volume", c.volume},         {"asymptotic", c.asymptotic}};
}

int cmd_profile(const Options& o, std::ostream& out) {
  const auto vs = volume_list(o);
  const ConeSpec cone = load_cone(o);
  const auto cfg = config_of(o);
  const std::string csv = profile_csv(cone, vs, cfg.tolerances);
  out << csv;
  Output files(o, "profile", cone_to_json(cone));
  files.write("profile.csv", csv);
  files.finish({{"volumes", vs}, {"config", to_json(cfg)}});
  return 0;
}

int cmd_compare(const Options& o, std::ostream& out) {
  const auto vs = volume_list(o);
  const ConeSpec cone = load_cone(o);
  const auto cfg = config_of(o);
  const std::string csv = profile_csv(cone, vs, cfg.tolerances);
  json j = json::array();
  for (double v : vs) {
    const auto p = candidate_profile(cone, v, cfg.tolerances);
    json ranked = json::array();
    for (const auto& c : p.ranked) ranked.push_back(candidate_json(c));
    j.push_back({{"volume", v},
                 {"winner", to_string(p.winner)},
                 {"winner_perimeter", p.winner_perimeter},
                 {"halfspace_profile", p.halfspace_profile},
                 {"ranked", ranked}});
  }
  out << csv;
  Output files(o, "compare", cone_to_json(cone));
  files.write("compare.csv", csv);
  files.write("compare.json", j.dump(2) + "\n");
  files.finish({{"volumes", vs}, {"config", to_json(cfg)}});
  return 0;
}

int cmd_existence(const Options& o, std::ostream& out) {
  const ConeSpec cone = load_cone(o);
  const auto cfg = config_of(o);
  const auto r = existence_report(cone, {}, cfg.tolerances);
  json j{{"solid_angle", r.solid_angle},
         {"half_sphere_measure", r.half_sphere_measure},
         {"half_volume_criterion", r.half_volume_criterion},
         {"supporting_hyperplane_criterion", r.supporting_hyperplane_criterion},
         {"conclusion", to_string(r.conclusion)}};
  if (r.profile_gap_certificate) {
    j["profile_gap_certificate"] = {{"perimeter", r.profile_gap_certificate->perimeter},
                                    {"volume", r.profile_gap_certificate->volume}};
  } else {
    j["profile_gap_certificate"] = nullptr;
  }
  out << "solid_angle " << format_double(r.solid_angle) << "\n"
      << "half_sphere_measure " << format_double(r.half_sphere_measure) << "\n"
      << "conclusion " << to_string(r.conclusion) << "\n";
  Output files(o, "existence", cone_to_json(cone));
  files.write("existence.json", j.dump(2) + "\n");
  files.finish({{"config", to_json(cfg)}});
  return 0;
}

int cmd_minimize(const Options& o, std::ostream& out) {
  const ConeSpec cone = load_cone(o);
  if (!o.volumes.empty()) throw ValidationError("minimize takes a single --volume");
  const auto cfg = config_of(o);
  require_positive_volumes({cfg.optimizer.target_volume});
  cfg.optimizer.validate();
  const json canonical{{"cone", cone_to_json(cone)}, {"config", to_json(cfg.optimizer)}};
  const std::string dir = "run-" + run_id(canonical);

  const OptimizationRun run = minimize(cone, cfg.optimizer, default_thread_count());
  json report = run_report_json(run);
  try {
    const auto a = analyze(*run.final_surface, cfg.tolerances);
    report["verdict"] = to_string(a.verdict);
  } catch (const ValidationError& e) {
    report["verdict"] = nullptr;
    report["verdict_error"] = e.what();
  }

  out << "run " << dir << "\n"
      << "converged " << (run.converged ? "true" : "false") << "\n"
      << "perimeter " << format_double(run.perimeter) << "\n"
      << "volume " << format_double(run.volume) << "\n"
      << "best_candidate_gap " << format_double(run.best_candidate_gap) << "\n";
  if (report["verdict"].is_string()) out << "verdict " << report["verdict"].get<std::string>() << "\n";

  Output files(o, "minimize", cone_to_json(cone));
  files.write(dir + "/config.json", to_json(cfg).dump(2) + "\n");
  files.write(dir + "/trace.csv", trace_csv(run));
  files.write(dir + "/final_surface.json", surface_to_json(*run.final_surface).dump(2) + "\n");
  files.write(dir + "/report.json", report.dump(2) + "\n");
  files.finish({{"config", to_json(cfg)}, {"run_id", dir}});
  return 0;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  const ConeSpec cone = load_cone(o);
  if (o.volumes.empty()) throw ValidationError("sweep needs --volumes");
  require_positive_volumes(o.volumes);
  Options base = o;
  base.volume.reset();
  const auto cfg = config_of(base);
  cfg.optimizer.validate();
  const auto s = profile_sweep(cone, o.volumes, cfg.optimizer, default_thread_count());
  const std::string csv = sweep_csv(s);
  json rows = json::array();
  for (const auto& r : s.rows) {
    rows.push_back({{"volume", r.volume},
                    {"perimeter_numerical", r.failed ? json(nullptr) : json(r.perimeter_numerical)},
                    {"perimeter_candidate", r.perimeter_candidate},
                    {"gap", r.failed ? json(nullptr) : json(r.gap)},
                    {"converged", r.converged},
                    {"failed", r.failed},
                    {"error", r.error}});
  }
  const json summary{{"fitted_slope", s.fitted_slope}, {"linearity_residual", s.linearity_residual}, {"rows", rows}};
  out << csv << "fitted_slope " << format_double(s.fitted_slope) << "\n"
      << "linearity_residual " << format_double(s.linearity_residual) << "\n";
  Output files(o, "sweep", cone_to_json(cone));
  files.write("sweep.csv", csv);
  files.write("sweep.json", summary.dump(2) + "\n");
  files.finish({{"volumes", o.volumes}, {"config", to_json(cfg)}});
  return 0;
}

DiscreteHypersurface load_surface(const Options& o, const ConeSpec& cone, const Tolerances& tol) {
  if (o.surface.empty()) throw ValidationError("--surface is required");
  return surface_from_json(read_json_file(o.surface), cone, tol);
}

int cmd_stability(const Options& o, std::ostream& out) {
  const ConeSpec cone = load_cone(o);
  const auto cfg = config_of(o);
  const auto surface = load_surface(o, cone, cfg.tolerances);
  const auto report = analyze(surface, cfg.tolerances);
  out << render_table(report);
  Output files(o, "stability", cone_to_json(cone));
  files.write("stability.json", to_json(report).dump(2) + "\n");
  files.finish({{"surface", o.surface}, {"config", to_json(cfg)}});
  return 0;
}

json check_entry(double value, double threshold) {
  return json{{"value", value}, {"threshold", threshold}, {"pass", std::abs(value) <= threshold}};
}

int cmd_checks(const Options& o, std::ostream& out) {
  const ConeSpec cone = load_cone(o);
  const auto cfg = config_of(o);
  const auto surface = load_surface(o, cone, cfg.tolerances);
  const auto r = analyze(surface, cfg.tolerances);
  const auto q = quantities(surface, cfg.tolerances);

  json checks = json::object();
  checks["minkowski1"] = check_entry(r.minkowski1_residual, 1e-6);
  checks["minkowski2"] = check_entry(r.minkowski2_residual, 1e-6);
  if (r.boundary_identity_evaluated) {
    checks["boundary_identity"] = check_entry(r.boundary_identity_residual, 1e-4);
  }
  checks["index_form_direct_vs_gradient"] =
      check_entry(r.Q_direct - r.Q_gradient_form, r.consistency_tolerance);
  checks["index_form_direct_vs_closed"] = check_entry(r.Q_direct - r.Q_closed, r.consistency_tolerance);
  bool all = true;
  for (const auto& [k, v] : checks.items()) all = all && v["pass"].get<bool>();

  const json j{{"checks", checks}, {"all_pass", all}, {"verdict", to_string(r.verdict)}, {"report", to_json(r)}};
  for (const auto& [k, v] : checks.items()) {
    out << std::left << std::setw(32) << k << format_double(v["value"].get<double>()) << "  "
        << (v["pass"].get<bool>() ? "pass" : "FAIL") << "\n";
  }
  out << std::left << std::setw(32) << "verdict" << to_string(r.verdict) << "\n";

  Output files(o, "checks", cone_to_json(cone));
  files.write("checks.json", j.dump(2) + "\n");
  files.write("quantities.csv", quantities_csv(q, surface));
  files.finish({{"surface", o.surface}, {"config", to_json(cfg)}});
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Isoperimetric regions in cones: candidates, stability checks and numerical minimization", "cone_iso"};
  app.require_subcommand(1);
  Options o;

  struct Spec {
    const char* name;
    const char* help;
    bool volume, volumes, surface, optimizer;
  };
  const Spec specs[] = {
      {"profile", "candidate perimeters and winner per volume", true, true, false, false},
      {"compare", "rank the analytic candidates at one or more volumes", true, true, false, false},
      {"existence", "sufficient conditions for existence of isoperimetric regions", false, false, false, false},
      {"minimize", "numerically minimize perimeter at fixed volume", true, false, false, true},
      {"sweep", "minimize over a list of volumes and fit the power law", false, true, false, true},
      {"stability", "index form and classification of a surface", false, false, true, false},
      {"checks", "Minkowski, boundary-identity and index-form checks of a surface", false, false, true, false},
  };
  std::vector<CLI::App*> subs;
  for (const auto& s : specs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--cone", o.cone, "cone as inline JSON or a JSON file");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--config", o.config, "JSON configuration file");
    if (s.volume) sub->add_option("--volume", o.volume, "enclosed volume");
    if (s.volumes) sub->add_option("--volumes", o.volumes, "comma-separated volumes")->delimiter(',');
    if (s.surface) sub->add_option("--surface", o.surface, "surface JSON file")->required();
    if (s.optimizer) {
      sub->add_option("--resolution", o.resolution, "vertex count");
      sub->add_option("--seed", o.seed, "RNG seed");
      sub->add_option("--restarts", o.restarts, "number of restarts");
      sub->add_option("--initializer", o.initializer, "VertexCap, BoundaryHalfBall or RandomBlob");
    }
    subs.push_back(sub);
  }

  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.push_back("cone_iso");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (auto& ch : msg) {
      if (ch == '\n') ch = ' ';
    }
    err << "error: " << msg << "\n";
    return 2;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "profile") return cmd_profile(o, out);
    if (name == "compare") return cmd_compare(o, out);
    if (name == "existence") return cmd_existence(o, out);
    if (name == "minimize") return cmd_minimize(o, out);
    if (name == "sweep") return cmd_sweep(o, out);
    if (name == "stability") return cmd_stability(o, out);
    return cmd_checks(o, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace coneiso
