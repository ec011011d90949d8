// hcf: scenario runner for the haptic complementary filter.
//
//   hcf presets [--show NAME]
//   hcf run (--preset NAME | --config FILE) --out DIR [--set k=v]... [--seed N] [--quiet]
//   hcf montecarlo (--preset NAME | --config FILE) --runs N --out DIR [--seed N] [--threads N]
//   hcf export-piball TRAJECTORY.csv OUT.csv
//   hcf sample-cloud --out FILE [--shape ax,ay,az,e1,e2] [--n N] [--seed N]
//   hcf fit CLOUD [--initial ax,ay,az,e1,e2]

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <unistd.h>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hcf/hcf.hpp"
#include "hcf/io.hpp"

namespace fs = std::filesystem;
using hcf::io::json;

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kMalformed = 2,
  kInvalid = 3,
  kSingular = 4,
  kStalled = 5,
  kMaxTime = 6,
  kAntiAligned = 7,
  kUnstableSet = 8,
  kNotAllConverged = 9,
};

int exit_code_for(hcf::Outcome o) {
  switch (o) {
    case hcf::Outcome::converged: return kOk;
    case hcf::Outcome::stalled: return kStalled;
    case hcf::Outcome::max_time: return kMaxTime;
    case hcf::Outcome::anti_aligned: return kAntiAligned;
    case hcf::Outcome::unstable_set_proximity: return kUnstableSet;
  }
  return kFailure;
}

bool use_color() { return std::getenv("NO_COLOR") == nullptr && isatty(STDOUT_FILENO); }

std::string paint(std::string_view text, bool good) {
  if (!use_color()) return std::string(text);
  return std::string(good ? "\033[32m" : "\033[33m") + std::string(text) + "\033[0m";
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct ScenarioArgs {
  std::string preset;
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_scenario_flags(CLI::App* cmd, ScenarioArgs& args) {
  auto* p = cmd->add_option("--preset", args.preset, "Named scenario");
  auto* c = cmd->add_option("--config", args.config_path, "Scenario JSON file");
  p->excludes(c);
  cmd->add_option("--set", args.overrides, "Override a config value, e.g. gains.k_p=1");
  cmd->add_option("--seed", args.seed, "Override the scenario seed");
}

hcf::ScenarioConfig load_scenario(const ScenarioArgs& args) {
  json j;
  if (!args.preset.empty()) {
    j = hcf::io::config_to_json(hcf::preset(args.preset));
  } else if (!args.config_path.empty()) {
    j = hcf::io::parse_json_text(hcf::io::read_file(args.config_path), args.config_path);
  } else {
    throw hcf::ConfigError("one of --preset or --config is required");
  }
  for (const std::string& o : args.overrides) hcf::io::apply_override(j, o);
  if (args.seed) j["seed"] = *args.seed;
  hcf::ScenarioConfig c = hcf::io::config_from_json(j);
  c.validate();
  return c;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::vector<double> parse_list(const std::string& s, std::size_t n, const char* what) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double x = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0') throw hcf::ConfigError(std::string(what) + ": bad number '" + item + "'");
    v.push_back(x);
  }
  if (v.size() != n) throw hcf::ConfigError(std::string(what) + ": expected " + std::to_string(n) + " values");
  return v;
}

hcf::Superquadric parse_shape(const std::string& s) {
  const auto v = parse_list(s, 5, "shape");
  hcf::Superquadric sq{v[0], v[1], v[2], v[3], v[4]};
  try {
    sq.validate();
  } catch (const hcf::InvalidArgument& e) {
    throw hcf::ValidationError(e.what());
  }
  return sq;
}

int cmd_presets(const std::string& show) {
  if (!show.empty()) {
    std::cout << dump(hcf::io::config_to_json(hcf::preset(show)));
    return kOk;
  }
  for (const auto& name : hcf::preset_names()) std::cout << name << '\n';
  return kOk;
}

int cmd_run(const ScenarioArgs& args, const std::string& out_dir, bool quiet) {
  const hcf::ScenarioConfig config = load_scenario(args);
  const std::string started = utc_now();
  const hcf::TrajectoryRecord record = hcf::run(config);

  fs::create_directories(out_dir);
  std::ostringstream csv;
  hcf::io::write_trajectory_csv(csv, record.rows);
  hcf::io::write_file_atomic(fs::path(out_dir) / "trajectory.csv", csv.str());
  const json summary = hcf::io::summary_to_json(config, record);
  hcf::io::write_file_atomic(fs::path(out_dir) / "summary.json", dump(summary));

  hcf::io::RunManifest m;
  m.config_hash = hcf::io::config_hash(config);
  m.seed = config.seed;
  m.started_at = started;
  m.finished_at = utc_now();
  m.outcome = std::string(hcf::to_string(record.summary.outcome));
  m.final_metrics = {{"final_trace_error", record.summary.final_trace_error},
                     {"final_euler", summary["final_euler"]},
                     {"wall_time_s", record.summary.wall_time_s}};
  hcf::io::write_file_atomic(fs::path(out_dir) / "manifest.json", dump(hcf::io::manifest_to_json(m)));

  if (!quiet) {
    const auto& s = record.summary;
    const bool good = s.outcome == hcf::Outcome::converged;
    std::printf("%s: %s  euler(yaw,pitch,roll) = (%.4f, %.4f, %.4f)  trace_error = %.6g\n",
                config.name.c_str(), paint(hcf::to_string(s.outcome), good).c_str(),
                s.final_euler.yaw, s.final_euler.pitch, s.final_euler.roll, s.final_trace_error);
    if (s.unstable_warnings > 0) {
      std::fprintf(stderr, "warning: %lld steps within %.0e of the unstable set\n",
                   static_cast<long long>(s.unstable_warnings), hcf::kUnstableWarnDistance);
    }
  }
  return exit_code_for(record.summary.outcome);
}

int cmd_montecarlo(const ScenarioArgs& args, long long runs, unsigned threads,
                   const std::string& out_dir, bool quiet) {
  if (runs < 1) throw hcf::ConfigError("--runs must be at least 1");
  const hcf::ScenarioConfig config = load_scenario(args);
  const std::string started = utc_now();
  const std::uint64_t seed = config.seed;
  hcf::MonteCarloOptions opts;
  opts.threads = threads;
  const hcf::MonteCarloSummary mc =
      hcf::monte_carlo(config, static_cast<std::size_t>(runs), seed, opts);

  fs::create_directories(out_dir);
  std::ostringstream csv;
  hcf::io::write_montecarlo_runs_csv(csv, mc);
  hcf::io::write_file_atomic(fs::path(out_dir) / "runs.csv", csv.str());
  const json aggregate = hcf::io::montecarlo_to_json(config, mc, seed);
  hcf::io::write_file_atomic(fs::path(out_dir) / "aggregate.json", dump(aggregate));

  hcf::io::RunManifest m;
  m.config_hash = hcf::io::config_hash(config);
  m.seed = seed;
  m.started_at = started;
  m.finished_at = utc_now();
  m.outcome = mc.converged == mc.n_runs ? "converged" : "not_all_converged";
  m.final_metrics = {{"converged_fraction", mc.converged_fraction},
                     {"worst_final_error", mc.worst_final_error}};
  hcf::io::write_file_atomic(fs::path(out_dir) / "manifest.json", dump(hcf::io::manifest_to_json(m)));

  if (!quiet) {
    const bool good = mc.converged == mc.n_runs;
    std::printf("%s: %zu/%zu converged (%s), anti-aligned %zu, worst final trace error %.3g\n",
                config.name.c_str(), mc.converged, mc.n_runs,
                paint(good ? "ok" : "incomplete", good).c_str(), mc.anti_aligned,
                mc.worst_final_error);
  }
  return mc.converged == mc.n_runs ? kOk : kNotAllConverged;
}

int cmd_export_piball(const std::string& traj, const std::string& out) {
  std::ifstream in(traj);
  if (!in) throw hcf::ConfigError("cannot open " + traj);
  const auto rows = hcf::io::read_trajectory_csv(in);
  std::ostringstream csv;
  hcf::io::write_piball_csv(csv, rows);
  hcf::io::write_file_atomic(out, csv.str());
  return kOk;
}

int cmd_sample_cloud(const std::string& shape, std::size_t n, std::uint64_t seed,
                     const std::string& out) {
  const hcf::Superquadric sq = parse_shape(shape);
  hcf::Rng rng(seed);
  std::ostringstream ss;
  hcf::write_point_cloud(ss, hcf::sample_surface(sq, n, rng));
  hcf::io::write_file_atomic(out, ss.str());
  return kOk;
}

int cmd_fit(const std::string& cloud_path, const std::string& initial) {
  std::ifstream in(cloud_path);
  if (!in) throw hcf::ConfigError("cannot open " + cloud_path);
  const auto cloud = hcf::read_point_cloud(in);
  const hcf::FitResult fit = hcf::fit_superquadric(cloud, parse_shape(initial));
  const json j{{"ax", fit.params.ax},     {"ay", fit.params.ay},   {"az", fit.params.az},
               {"eps1", fit.params.eps1}, {"eps2", fit.params.eps2}, {"cost", fit.cost},
               {"iterations", fit.iterations}};
  std::cout << dump(j);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Haptic complementary filter on SO(3): scenario runner"};
  app.set_version_flag("--version", std::string(hcf::kVersion));
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("--quiet", quiet, "Suppress terminal summaries");

  std::string show;
  auto* presets = app.add_subcommand("presets", "List built-in scenarios");
  presets->add_option("--show", show, "Print the JSON config of a preset");

  ScenarioArgs run_args;
  std::string run_out;
  auto* run = app.add_subcommand("run", "Run one scenario");
  add_scenario_flags(run, run_args);
  run->add_option("--out", run_out, "Output directory")->required();
  run->add_flag("--quiet", quiet);

  ScenarioArgs mc_args;
  std::string mc_out;
  long long runs = 0;
  unsigned threads = 0;
  auto* mc = app.add_subcommand("montecarlo", "Monte Carlo over Haar-random initial estimates");
  add_scenario_flags(mc, mc_args);
  mc->add_option("--runs", runs, "Number of trials")->required();
  mc->add_option("--threads", threads, "Worker threads (0 = all cores)");
  mc->add_option("--out", mc_out, "Output directory")->required();
  mc->add_flag("--quiet", quiet);

  std::string traj, piball_out;
  auto* piball = app.add_subcommand("export-piball", "Write axis-angle points of a trajectory");
  piball->add_option("trajectory", traj, "Trajectory CSV")->required();
  piball->add_option("out", piball_out, "Output CSV")->required();

  std::string shape = "0.25,0.05,0.05,1,1", cloud_out;
  std::size_t n_points = 500;
  std::uint64_t cloud_seed = 0;
  auto* sample = app.add_subcommand("sample-cloud", "Sample points on a superquadric surface");
  sample->add_option("--shape", shape, "ax,ay,az,eps1,eps2");
  sample->add_option("--n", n_points, "Number of points");
  sample->add_option("--seed", cloud_seed, "Random seed");
  sample->add_option("--out", cloud_out, "Output file")->required();

  std::string cloud_in, initial = "0.25,0.05,0.05,1,1";
  auto* fit = app.add_subcommand("fit", "Fit a superquadric to a point cloud");
  fit->add_option("cloud", cloud_in, "Point cloud file")->required();
  fit->add_option("--initial", initial, "ax,ay,az,eps1,eps2");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kMalformed;
  }

  try {
    if (*presets) return cmd_presets(show);
    if (*run) return cmd_run(run_args, run_out, quiet);
    if (*mc) return cmd_montecarlo(mc_args, runs, threads, mc_out, quiet);
    if (*piball) return cmd_export_piball(traj, piball_out);
    if (*sample) return cmd_sample_cloud(shape, n_points, cloud_seed, cloud_out);
    if (*fit) return cmd_fit(cloud_in, initial);
  } catch (const hcf::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kMalformed;
  } catch (const hcf::ValidationError& e) {
    std::fprintf(stderr, "invalid config: %s\n", e.what());
    return kInvalid;
  } catch (const hcf::SingularityError& e) {
    std::fprintf(stderr, "singularity: %s\n", e.what());
    return kSingular;
  } catch (const hcf::InvalidArgument& e) {
    std::fprintf(stderr, "invalid argument: %s\n", e.what());
    return kInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kFailure;
}
