#pragma once

// Scenario construction and fixed-step execution of the filter.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "hcf/errors.hpp"
#include "hcf/filter.hpp"
#include "hcf/random.hpp"
#include "hcf/sensing.hpp"
#include "hcf/so3.hpp"
#include "hcf/superquadric.hpp"

namespace hcf {

inline constexpr double kSettleTolerance = 1e-9;       // rad over the settle window
inline constexpr int kSettleWindow = 100;              // steps
inline constexpr double kConvergedTraceError = 1e-2;
inline constexpr double kUnstableWarnDistance = 1e-3;
inline constexpr double kAntiAlignedTolerance = 1e-2;  // rad from π

enum class VisionSource { constant, true_rotation };

struct VisionConfig {
  VisionSource source = VisionSource::constant;
  RotationMatrix r_cam_world;
  RotationMatrix r_peg_cam;  // ignored for VisionSource::true_rotation
};

struct ArmConfig {
  Vec3 ee_position_world = Vec3::Zero();
  double k_c = 1.0;
  double beta = -1.0;
  Vec3 f_measured = Vec3::Zero();  // in the sensor frame
  std::optional<ForceNoiseModel> noise;
  // Estimated sensor-to-peg rotation; when set the measured force is
  // rotated into the peg frame before forming the residual.
  std::optional<RotationMatrix> sensor_to_peg;
};

struct ScenarioConfig {
  std::string name = "custom";
  Superquadric superquadric;
  std::array<ArmConfig, 2> arms;
  std::optional<VisionConfig> vision;
  double k_p = 0.0;
  RotationMatrix r_hat0;
  RotationMatrix r_true;
  double dt = 0.01;
  double duration = 60.0;
  std::uint64_t seed = 0;

  std::size_t steps() const { return static_cast<std::size_t>(std::llround(duration / dt)); }

  FilterGains gains() const { return {arms[0].beta, arms[1].beta, k_p}; }

  /// Throws ValidationError on any semantic violation.
  void validate() const {
    if (!(dt > 0.0)) throw ValidationError("dt must be positive");
    if (!(duration >= dt)) throw ValidationError("duration must be at least dt");
    try {
      superquadric.validate();
      gains().validate();
    } catch (const InvalidArgument& e) {
      throw ValidationError(e.what());
    }
    if (k_p > 0.0 && !vision) throw ValidationError("k_p > 0 requires a vision block");
    for (std::size_t i = 0; i < arms.size(); ++i) {
      const ArmConfig& arm = arms[i];
      const std::string tag = "arm " + std::to_string(i + 1) + ": ";
      if (!(arm.k_c > 0.0)) throw ValidationError(tag + "k_c must be positive");
      const Vec3 local = r_true.matrix().transpose() * arm.ee_position_world;
      if (!(local.norm() > kOriginGuard) || !(inside_outside(superquadric, local) > 1.0)) {
        throw ValidationError(tag + "end-effector lies inside the superquadric");
      }
      if (arm.noise) {
        if (!(arm.noise->variance >= 0.0)) throw ValidationError(tag + "noise variance < 0");
        if (!(arm.noise->sample_time > 0.0)) throw ValidationError(tag + "noise sample_time <= 0");
        const double ratio = arm.noise->sample_time / dt;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio) || ratio < 0.5) {
          throw ValidationError(tag + "noise sample_time must be an integer multiple of dt");
        }
      }
    }
  }

  /// Peg orientation reported by vision, or nullopt when not configured.
  std::optional<VisionMeasurement> vision_measurement() const {
    if (!vision) return std::nullopt;
    if (vision->source == VisionSource::true_rotation) {
      return VisionMeasurement{vision->r_cam_world, vision->r_cam_world.transpose() * r_true};
    }
    return VisionMeasurement{vision->r_cam_world, vision->r_peg_cam};
  }
};

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"case_a", "case_a_vision", "case_b", "case_c",
                                                 "case_d", "edge_grasp", "edge_grasp_uncorrected"};
  return names;
}

namespace detail {

inline ScenarioConfig base_case(const Vec3& grasp) {
  ScenarioConfig c;
  c.arms[0].ee_position_world = -grasp;
  c.arms[0].f_measured = Vec3(-1.0, 0.0, 0.0);
  c.arms[1].ee_position_world = grasp;
  c.arms[1].f_measured = Vec3(1.0, 0.0, 0.0);
  return c;
}

}  // namespace detail

/**
 * Named scenario setups.
 *
 *   case_a                 peg in the X-Y plane, haptics only
 *   case_a_vision          case_a geometry with vision reporting the true rotation, k_p = 1
 *   case_b                 peg out of plane (yaw 45°, pitch −45°), haptics only
 *   case_c                 case_b plus vision rot_z(45°), k_p = 1
 *   case_d                 case_c plus held Gaussian force noise (σ² = 0.5, 2; 0.2 s)
 *   edge_grasp             box-like peg grasped at edge midpoints, forces rotated into the peg frame
 *   edge_grasp_uncorrected same, with the raw sensor-frame forces
 *
 * Throws ConfigError for unknown names.
 */
inline ScenarioConfig preset(std::string_view name) {
  constexpr double kQuarter = std::numbers::pi / 4.0;
  if (name == "case_a" || name == "case_a_vision") {
    ScenarioConfig c = detail::base_case(Vec3(0.3, 0.3, 0.0));
    c.name = std::string(name);
    c.r_true = rot_z(kQuarter);
    if (name == "case_a_vision") {
      c.vision = VisionConfig{VisionSource::true_rotation, RotationMatrix::identity(),
                              RotationMatrix::identity()};
      c.k_p = 1.0;
    }
    return c;
  }
  if (name == "case_b" || name == "case_c" || name == "case_d") {
    // The grasp points lie on the (1,1,1) diagonal; the peg's nominal
    // orientation is yaw 45° then pitch −45°.
    ScenarioConfig c = detail::base_case(Vec3(0.3, 0.3, 0.3));
    c.name = std::string(name);
    c.r_true = from_euler_zyx({kQuarter, -kQuarter, 0.0});
    if (name != "case_b") {
      c.vision = VisionConfig{VisionSource::constant, RotationMatrix::identity(), rot_z(kQuarter)};
      c.k_p = 1.0;
    }
    if (name == "case_d") {
      c.arms[0].noise = ForceNoiseModel{0.0, 0.5, 0.2, 1};
      c.arms[1].noise = ForceNoiseModel{0.0, 2.0, 0.2, 2};
    }
    return c;
  }
  if (name == "edge_grasp" || name == "edge_grasp_uncorrected") {
    // Reconstructed configuration: box-like peg, end-effectors at the
    // midpoints of two opposite long edges, each sensor rolled 45° about
    // the peg x axis. The initial estimate shares that roll, so the raw
    // sensor-frame forces look consistent with a wrong estimate. The edge
    // sits only ~14 mm outside the box, so the contact spring is stiffer.
    ScenarioConfig c;
    c.name = std::string(name);
    c.superquadric = Superquadric{0.25, 0.05, 0.05, 0.2, 0.2};
    c.arms[0].ee_position_world = Vec3(0.0, -0.06, -0.06);
    c.arms[0].f_measured = Vec3(0.0, -1.0, 0.0);
    c.arms[1].ee_position_world = Vec3(0.0, 0.06, 0.06);
    c.arms[1].f_measured = Vec3(0.0, 1.0, 0.0);
    c.arms[0].k_c = c.arms[1].k_c = 100.0;
    c.r_true = RotationMatrix::identity();
    c.r_hat0 = rot_x(kQuarter);
    if (name == "edge_grasp") {
      c.arms[0].sensor_to_peg = rot_x(kQuarter);
      c.arms[1].sensor_to_peg = rot_x(kQuarter);
    }
    return c;
  }
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

enum class Outcome { converged, stalled, anti_aligned, unstable_set_proximity, max_time };

constexpr std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::converged: return "converged";
    case Outcome::stalled: return "stalled";
    case Outcome::anti_aligned: return "anti_aligned";
    case Outcome::unstable_set_proximity: return "unstable_set_proximity";
    case Outcome::max_time: return "max_time";
  }
  return "unknown";
}

inline std::optional<Outcome> outcome_from_string(std::string_view s) {
  for (Outcome o : {Outcome::converged, Outcome::stalled, Outcome::anti_aligned,
                    Outcome::unstable_set_proximity, Outcome::max_time}) {
    if (to_string(o) == s) return o;
  }
  return std::nullopt;
}

struct TrajectoryRow {
  std::int64_t step = 0;
  double t = 0.0;
  RotationMatrix r_hat;
  EulerZYX euler;
  Vec3 axis_angle = Vec3::Zero();
  Vec3 f_h1 = Vec3::Zero();
  Vec3 f_h2 = Vec3::Zero();
  Vec3 sigma = Vec3::Zero();
  double trace_error = 0.0;
  double unstable_distance = 0.0;
};

struct RunSummary {
  RotationMatrix final_r_hat;
  EulerZYX final_euler;
  Outcome outcome = Outcome::max_time;
  double final_trace_error = 0.0;
  std::optional<double> settled_at;        // settle detector fired at this time
  std::optional<double> convergence_time;  // first t with trace_error < kConvergedTraceError
  double peak_trace_error = 0.0;
  double path_length = 0.0;                // Σ geodesic step lengths, rad
  std::int64_t unstable_warnings = 0;      // steps with unstable distance < kUnstableWarnDistance
  double wall_time_s = 0.0;
};

struct TrajectoryRecord {
  std::vector<TrajectoryRow> rows;
  RunSummary summary;
};

struct RunOptions {
  bool record_rows = true;
};

namespace detail {

inline double vector_angle(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

/// Measured forces at time t in the peg frame: noise, then edge correction.
inline std::array<HapticChannel, 2> channels_at(const ScenarioConfig& c, double t) {
  std::array<HapticChannel, 2> ch;
  for (std::size_t i = 0; i < 2; ++i) {
    const ArmConfig& arm = c.arms[i];
    Vec3 f = arm.f_measured;
    if (arm.noise) {
      ForceNoiseModel m = *arm.noise;
      m.seed = hash_combine(c.seed, m.seed);
      f = apply_force_noise(f, m, t);
    }
    if (arm.sensor_to_peg) f = edge_grasp_force_correction(f, *arm.sensor_to_peg);
    ch[i] = HapticChannel{arm.k_c, arm.beta, arm.ee_position_world, f};
  }
  return ch;
}

}  // namespace detail

/**
 * Fixed-step simulation over duration/dt steps. Row n holds R̂ at t = n·dt
 * together with the residuals evaluated there, so the record has
 * steps() + 1 rows. Output is a deterministic function of the config.
 */
inline TrajectoryRecord run(const ScenarioConfig& config, const RunOptions& options = {}) {
  config.validate();
  const auto wall_start = std::chrono::steady_clock::now();

  const std::size_t steps = config.steps();
  const FilterGains gains = config.gains();
  const std::optional<VisionMeasurement> vision = config.vision_measurement();
  const std::optional<RotationMatrix> r_vision =
      vision ? std::optional<RotationMatrix>(vision_world_rotation(*vision)) : std::nullopt;
  const RotationMatrix error_reference = r_vision ? *r_vision : config.r_true;

  TrajectoryRecord record;
  if (options.record_rows) record.rows.reserve(steps + 1);
  RunSummary& summary = record.summary;

  std::vector<RotationMatrix> window(kSettleWindow + 1);
  FilterState state{config.r_hat0, 0.0, config.dt};
  StepResult last;
  for (std::size_t n = 0; n <= steps; ++n) {
    state.t = static_cast<double>(n) * config.dt;
    const auto channels = detail::channels_at(config, state.t);
    last = filter_step(state, config.superquadric, channels, vision, gains);

    const double err = trace_error(config.r_true, state.r_hat);
    const double unstable = unstable_set_distance(rotation_error(state.r_hat, error_reference));
    summary.peak_trace_error = std::max(summary.peak_trace_error, err);
    if (unstable < kUnstableWarnDistance) ++summary.unstable_warnings;
    if (!summary.convergence_time && err < kConvergedTraceError) summary.convergence_time = state.t;

    window[n % window.size()] = state.r_hat;
    if (!summary.settled_at && n >= static_cast<std::size_t>(kSettleWindow) &&
        geodesic_distance(state.r_hat, window[(n - kSettleWindow) % window.size()]) <
            kSettleTolerance) {
      summary.settled_at = state.t;
    }

    if (options.record_rows) {
      TrajectoryRow row;
      row.step = static_cast<std::int64_t>(n);
      row.t = state.t;
      row.r_hat = state.r_hat;
      row.euler = to_euler_zyx_lenient(state.r_hat);
      row.axis_angle = to_axis_angle(state.r_hat).vector();
      row.f_h1 = last.f_h1;
      row.f_h2 = last.f_h2;
      row.sigma = last.sigma;
      row.trace_error = err;
      row.unstable_distance = unstable;
      record.rows.push_back(row);
    }
    if (n == steps) break;
    summary.path_length += geodesic_distance(state.r_hat, last.state.r_hat);
    state = last.state;
  }

  summary.final_r_hat = state.r_hat;
  summary.final_euler = to_euler_zyx_lenient(state.r_hat);
  summary.final_trace_error = trace_error(config.r_true, state.r_hat);

  bool anti = false;
  for (const auto& [fe, arm] : {std::pair{last.f_e1, 0}, std::pair{last.f_e2, 1}}) {
    const Vec3 f = detail::channels_at(config, state.t)[static_cast<std::size_t>(arm)].f_measured;
    if (fe.norm() > 0.0 && f.norm() > 0.0 &&
        detail::vector_angle(fe, f) > std::numbers::pi - kAntiAlignedTolerance) {
      anti = true;
    }
  }
  const double final_unstable =
      unstable_set_distance(rotation_error(state.r_hat, error_reference));
  if (anti) {
    summary.outcome = Outcome::anti_aligned;
  } else if (r_vision && config.k_p > 0.0 && final_unstable < kUnstableWarnDistance) {
    summary.outcome = Outcome::unstable_set_proximity;
  } else if (!summary.settled_at) {
    summary.outcome = Outcome::max_time;
  } else if (summary.path_length < kSettleTolerance &&
             summary.final_trace_error >= kConvergedTraceError) {
    summary.outcome = Outcome::stalled;
  } else {
    summary.outcome = Outcome::converged;
  }

  summary.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return record;
}

// ---------------------------------------------------------------------------
// Monte Carlo over initial estimates
// ---------------------------------------------------------------------------

struct MonteCarloOptions {
  bool randomize_initial = true;
  // Haar samples with tr(R̂₀ᵀ·R_true) + 1 at or below this are redrawn.
  double unstable_rejection = 1e-2;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct MonteCarloRun {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  RotationMatrix r_hat0;
  Outcome outcome = Outcome::max_time;
  double final_trace_error = 0.0;
  std::optional<double> convergence_time;
  bool converged = false;  // final trace_error < kConvergedTraceError
};

struct MonteCarloSummary {
  std::size_t n_runs = 0;
  std::size_t converged = 0;
  std::size_t anti_aligned = 0;
  double converged_fraction = 0.0;
  std::optional<double> median_settle_time;
  double worst_final_error = 0.0;
  std::vector<MonteCarloRun> runs;
};

inline std::uint64_t run_seed(std::uint64_t seed, std::size_t index) {
  return hash_combine(seed, static_cast<std::uint64_t>(index));
}

/// Draws a Haar-random R̂₀ away from the unstable set of R_true.
inline RotationMatrix initial_estimate_for_run(const RotationMatrix& r_true, std::uint64_t seed,
                                               double rejection) {
  Rng rng(seed);
  while (true) {
    RotationMatrix r = random_rotation(rng);
    if (unstable_set_distance(rotation_error(r, r_true)) > rejection) return r;
  }
}

/**
 * Runs n trials of `config`, each with its own derived seed and (by default)
 * a Haar-random initial estimate. Trials run on worker threads; the summary
 * depends only on (config, n, seed).
 */
inline MonteCarloSummary monte_carlo(const ScenarioConfig& config, std::size_t n,
                                     std::uint64_t seed, const MonteCarloOptions& options = {}) {
  if (n == 0) throw InvalidArgument("monte_carlo: n must be at least 1");
  config.validate();

  MonteCarloSummary summary;
  summary.n_runs = n;
  summary.runs.resize(n);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      MonteCarloRun& out = summary.runs[i];
      ScenarioConfig c = config;
      out.index = i;
      out.seed = run_seed(seed, i);
      c.seed = out.seed;
      if (options.randomize_initial) {
        c.r_hat0 = initial_estimate_for_run(c.r_true, out.seed, options.unstable_rejection);
      }
      out.r_hat0 = c.r_hat0;
      const TrajectoryRecord rec = run(c, RunOptions{false});
      out.outcome = rec.summary.outcome;
      out.final_trace_error = rec.summary.final_trace_error;
      out.convergence_time = rec.summary.convergence_time;
      out.converged = out.final_trace_error < kConvergedTraceError;
    }
  };

  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<double> settle;
  for (const MonteCarloRun& r : summary.runs) {
    if (r.converged) {
      ++summary.converged;
      if (r.convergence_time) settle.push_back(*r.convergence_time);
    }
    if (r.outcome == Outcome::anti_aligned) ++summary.anti_aligned;
    summary.worst_final_error = std::max(summary.worst_final_error, r.final_trace_error);
  }
  summary.converged_fraction = static_cast<double>(summary.converged) / static_cast<double>(n);
  if (!settle.empty()) {
    std::sort(settle.begin(), settle.end());
    const std::size_t m = settle.size();
    summary.median_settle_time =
        m % 2 ? settle[m / 2] : 0.5 * (settle[m / 2 - 1] + settle[m / 2]);
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Regression comparison
// ---------------------------------------------------------------------------

struct Reference {
  RotationMatrix final_r_hat;
  double tolerance = 0.02;                // per matrix entry
  std::optional<EulerZYX> euler;          // checked when set
  double euler_tolerance = 0.05;          // rad, per angle
};

struct ComparisonReport {
  Mat3 entry_delta = Mat3::Zero();        // record − reference
  double max_entry_delta = 0.0;
  EulerZYX euler_delta;                   // record − reference (wrapped)
  double max_euler_delta = 0.0;
  double trace_error = 0.0;               // trace(I − refᵀ·final)
  bool pass = false;
};

namespace detail {
inline double wrap_angle(double a) {
  return std::remainder(a, 2.0 * std::numbers::pi);
}
}  // namespace detail

inline ComparisonReport compare_to_reference(const TrajectoryRecord& record, const Reference& ref) {
  ComparisonReport rep;
  const RotationMatrix& fin = record.summary.final_r_hat;
  rep.entry_delta = fin.matrix() - ref.final_r_hat.matrix();
  rep.max_entry_delta = rep.entry_delta.cwiseAbs().maxCoeff();
  const EulerZYX ours = to_euler_zyx_lenient(fin);
  const EulerZYX theirs = ref.euler ? *ref.euler : to_euler_zyx_lenient(ref.final_r_hat);
  rep.euler_delta = {detail::wrap_angle(ours.yaw - theirs.yaw),
                     detail::wrap_angle(ours.pitch - theirs.pitch),
                     detail::wrap_angle(ours.roll - theirs.roll)};
  rep.max_euler_delta = std::max({std::abs(rep.euler_delta.yaw), std::abs(rep.euler_delta.pitch),
                                  std::abs(rep.euler_delta.roll)});
  rep.trace_error = trace_error(ref.final_r_hat, fin);
  rep.pass = rep.max_entry_delta <= ref.tolerance &&
             (!ref.euler || rep.max_euler_delta <= ref.euler_tolerance);
  return rep;
}

}  // namespace hcf
