#pragma once

// File formats: scenario config JSON, trajectory CSV, summary and manifest
// JSON, plus dotted-path overrides for scripted sweeps.

#include <nlohmann/json.hpp>

#include <array>
#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hcf/errors.hpp"
#include "hcf/sim.hpp"
#include "hcf/so3.hpp"
#include "hcf/version.hpp"

namespace hcf::io {

using nlohmann::json;

inline constexpr std::string_view kScenarioSchema = "hcf.scenario/1";
inline constexpr std::string_view kSummarySchema = "hcf.summary/1";
inline constexpr std::string_view kMonteCarloSchema = "hcf.montecarlo/1";
inline constexpr int kTrajectorySchemaVersion = 1;

// ---------------------------------------------------------------------------
// JSON helpers
// ---------------------------------------------------------------------------

namespace detail {

inline json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline json to_json(const RotationMatrix& r) {
  json rows = json::array();
  for (int i = 0; i < 3; ++i) rows.push_back(json::array({r(i, 0), r(i, 1), r(i, 2)}));
  return json{{"matrix", rows}};
}

inline json to_json(const EulerZYX& e) {
  return json{{"yaw", e.yaw}, {"pitch", e.pitch}, {"roll", e.roll}};
}

inline void reject_unknown(const json& j, std::initializer_list<std::string_view> known,
                           const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  return j.get<double>();
}

inline Vec3 vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(where + ": expected [x, y, z]");
  return Vec3(number(j[0], where), number(j[1], where), number(j[2], where));
}

inline RotationMatrix rotation(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected {\"matrix\": ...} or {\"euler_zyx\": ...}");
  if (j.contains("euler_zyx")) {
    reject_unknown(j, {"euler_zyx"}, where);
    const Vec3 e = vec3(j["euler_zyx"], where + ".euler_zyx");
    return from_euler_zyx({e.x(), e.y(), e.z()});
  }
  if (j.contains("matrix")) {
    reject_unknown(j, {"matrix"}, where);
    const json& m = j["matrix"];
    if (!m.is_array() || m.size() != 3) throw ConfigError(where + ".matrix: expected 3 rows");
    Mat3 out;
    for (int i = 0; i < 3; ++i) {
      const Vec3 row = vec3(m[static_cast<std::size_t>(i)], where + ".matrix");
      out.row(i) = row.transpose();
    }
    try {
      return RotationMatrix::from_matrix(out);
    } catch (const InvalidArgument& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  throw ConfigError(where + ": expected {\"matrix\": ...} or {\"euler_zyx\": ...}");
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  return number(j[key], key);
}

}  // namespace detail

/// Canonical JSON form of a scenario (rotations as matrices).
inline json config_to_json(const ScenarioConfig& c) {
  using detail::to_json;
  json arms = json::array();
  for (const ArmConfig& a : c.arms) {
    json arm{{"ee_position", to_json(a.ee_position_world)},
             {"k_c", a.k_c},
             {"beta", a.beta},
             {"f_measured", to_json(a.f_measured)},
             {"noise", nullptr},
             {"sensor_to_peg", nullptr}};
    if (a.noise) {
      arm["noise"] = json{{"mean", a.noise->mean},
                          {"variance", a.noise->variance},
                          {"sample_time", a.noise->sample_time},
                          {"seed", a.noise->seed}};
    }
    if (a.sensor_to_peg) arm["sensor_to_peg"] = to_json(*a.sensor_to_peg);
    arms.push_back(arm);
  }
  json vision = nullptr;
  if (c.vision) {
    vision = json{{"source", c.vision->source == VisionSource::constant ? "constant" : "true_rotation"},
                  {"r_cam_world", to_json(c.vision->r_cam_world)},
                  {"r_peg_cam", to_json(c.vision->r_peg_cam)}};
  }
  const Superquadric& sq = c.superquadric;
  return json{{"schema", kScenarioSchema},
              {"name", c.name},
              {"superquadric",
               {{"ax", sq.ax}, {"ay", sq.ay}, {"az", sq.az}, {"eps1", sq.eps1}, {"eps2", sq.eps2}}},
              {"arms", arms},
              {"vision", vision},
              {"gains", {{"k_p", c.k_p}}},
              {"initial_estimate", to_json(c.r_hat0)},
              {"true_rotation", to_json(c.r_true)},
              {"dt", c.dt},
              {"duration", c.duration},
              {"seed", c.seed}};
}

/// Parses a scenario. Throws ConfigError for malformed input and
/// ValidationError for well-formed values that are not admissible.
inline ScenarioConfig config_from_json(const json& j) {
  using namespace detail;
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  reject_unknown(j, {"schema", "name", "superquadric", "arms", "vision", "gains",
                     "initial_estimate", "true_rotation", "dt", "duration", "seed"},
                 "config");
  if (!j.contains("schema") || j["schema"] != kScenarioSchema) {
    throw ConfigError("config: schema must be \"" + std::string(kScenarioSchema) + "\"");
  }
  ScenarioConfig c;
  if (j.contains("name")) {
    if (!j["name"].is_string()) throw ConfigError("config.name: expected a string");
    c.name = j["name"].get<std::string>();
  }
  if (j.contains("superquadric")) {
    const json& s = j["superquadric"];
    if (!s.is_object()) throw ConfigError("superquadric: expected an object");
    reject_unknown(s, {"ax", "ay", "az", "eps1", "eps2"}, "superquadric");
    c.superquadric = Superquadric{get_or(s, "ax", c.superquadric.ax), get_or(s, "ay", c.superquadric.ay),
                                  get_or(s, "az", c.superquadric.az),
                                  get_or(s, "eps1", c.superquadric.eps1),
                                  get_or(s, "eps2", c.superquadric.eps2)};
  }
  if (!j.contains("arms") || !j["arms"].is_array() || j["arms"].size() != 2) {
    throw ConfigError("config.arms: expected exactly two arms");
  }
  for (std::size_t i = 0; i < 2; ++i) {
    const json& a = j["arms"][i];
    const std::string where = "arms[" + std::to_string(i) + "]";
    if (!a.is_object()) throw ConfigError(where + ": expected an object");
    reject_unknown(a, {"ee_position", "k_c", "beta", "f_measured", "noise", "sensor_to_peg"}, where);
    ArmConfig& arm = c.arms[i];
    if (!a.contains("ee_position") || !a.contains("f_measured")) {
      throw ConfigError(where + ": ee_position and f_measured are required");
    }
    arm.ee_position_world = vec3(a["ee_position"], where + ".ee_position");
    arm.f_measured = vec3(a["f_measured"], where + ".f_measured");
    arm.k_c = get_or(a, "k_c", arm.k_c);
    arm.beta = get_or(a, "beta", arm.beta);
    if (a.contains("noise") && !a["noise"].is_null()) {
      const json& n = a["noise"];
      if (!n.is_object()) throw ConfigError(where + ".noise: expected an object or null");
      reject_unknown(n, {"mean", "variance", "sample_time", "seed"}, where + ".noise");
      ForceNoiseModel m;
      m.mean = get_or(n, "mean", m.mean);
      m.variance = get_or(n, "variance", m.variance);
      m.sample_time = get_or(n, "sample_time", m.sample_time);
      if (n.contains("seed")) {
        if (!n["seed"].is_number_unsigned()) throw ConfigError(where + ".noise.seed: expected an unsigned integer");
        m.seed = n["seed"].get<std::uint64_t>();
      }
      arm.noise = m;
    }
    if (a.contains("sensor_to_peg") && !a["sensor_to_peg"].is_null()) {
      arm.sensor_to_peg = rotation(a["sensor_to_peg"], where + ".sensor_to_peg");
    }
  }
  if (j.contains("vision") && !j["vision"].is_null()) {
    const json& v = j["vision"];
    if (!v.is_object()) throw ConfigError("vision: expected an object or null");
    reject_unknown(v, {"source", "r_cam_world", "r_peg_cam"}, "vision");
    VisionConfig vc;
    const std::string source = v.value("source", std::string("constant"));
    if (source == "constant") vc.source = VisionSource::constant;
    else if (source == "true_rotation") vc.source = VisionSource::true_rotation;
    else throw ConfigError("vision.source: expected \"constant\" or \"true_rotation\"");
    if (v.contains("r_cam_world")) vc.r_cam_world = rotation(v["r_cam_world"], "vision.r_cam_world");
    if (v.contains("r_peg_cam")) vc.r_peg_cam = rotation(v["r_peg_cam"], "vision.r_peg_cam");
    c.vision = vc;
  }
  if (j.contains("gains")) {
    const json& g = j["gains"];
    if (!g.is_object()) throw ConfigError("gains: expected an object");
    reject_unknown(g, {"k_p"}, "gains");
    c.k_p = get_or(g, "k_p", c.k_p);
  }
  if (j.contains("initial_estimate")) c.r_hat0 = rotation(j["initial_estimate"], "initial_estimate");
  if (j.contains("true_rotation")) c.r_true = rotation(j["true_rotation"], "true_rotation");
  c.dt = get_or(j, "dt", c.dt);
  c.duration = get_or(j, "duration", c.duration);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("config.seed: expected an unsigned integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  return c;
}

inline json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/**
 * Sets the value at a dotted path ("gains.k_p", "arms.0.beta"). The value is
 * parsed as JSON when possible and taken as a string otherwise. Missing
 * object members and null intermediates are created.
 */
inline void apply_override(json& root, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "': expected key=value");
  }
  const std::string path(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }

  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override '" + path + "': empty path segment");
    json* child = nullptr;
    if (node->is_array()) {
      char* end = nullptr;
      const unsigned long idx = std::strtoul(key.c_str(), &end, 10);
      if (*end != '\0' || idx >= node->size()) {
        throw ConfigError("override '" + path + "': bad array index '" + key + "'");
      }
      child = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw ConfigError("override '" + path + "': '" + key + "' is not inside an object");
      child = &(*node)[key];
    }
    if (dot == std::string::npos) {
      *child = value;
      return;
    }
    node = child;
    start = dot + 1;
  }
}

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Stable digest of the canonical (sorted-key) config JSON.
inline std::string config_hash(const ScenarioConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_to_json(c).dump())));
  return buf;
}

// ---------------------------------------------------------------------------
// Trajectory CSV
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& trajectory_columns() {
  static const std::vector<std::string> cols = {
      "step",   "t",      "r11",    "r12",    "r13",    "r21",         "r22",
      "r23",    "r31",    "r32",    "r33",    "yaw",    "pitch",       "roll",
      "aa_x",   "aa_y",   "aa_z",   "fh1_x",  "fh1_y",  "fh1_z",       "fh2_x",
      "fh2_y",  "fh2_z",  "sigma_x", "sigma_y", "sigma_z", "trace_error", "unstable_distance"};
  return cols;
}

namespace detail {
inline void put(std::string& line, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), ",%.17g", v);
  line += buf;
}
inline void put(std::string& line, const Vec3& v) {
  put(line, v.x());
  put(line, v.y());
  put(line, v.z());
}
}  // namespace detail

/// Comma-separated, header row, LF endings, 17 significant digits.
inline void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows) {
  std::string line;
  const auto& cols = trajectory_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) line += ',';
    line += cols[i];
  }
  out << line << '\n';
  for (const TrajectoryRow& r : rows) {
    line = std::to_string(r.step);
    detail::put(line, r.t);
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) detail::put(line, r.r_hat(i, k));
    detail::put(line, r.euler.yaw);
    detail::put(line, r.euler.pitch);
    detail::put(line, r.euler.roll);
    detail::put(line, r.axis_angle);
    detail::put(line, r.f_h1);
    detail::put(line, r.f_h2);
    detail::put(line, r.sigma);
    detail::put(line, r.trace_error);
    detail::put(line, r.unstable_distance);
    out << line << '\n';
  }
}

/// Parses a trajectory CSV written by write_trajectory_csv. Throws
/// ConfigError on a wrong header, bad field count or unparsable number.
inline std::vector<TrajectoryRow> read_trajectory_csv(std::istream& in) {
  const auto& cols = trajectory_columns();
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("trajectory: empty file");
  {
    std::string expected;
    for (std::size_t i = 0; i < cols.size(); ++i) expected += (i ? "," : "") + cols[i];
    if (line != expected) throw ConfigError("trajectory: unexpected header");
  }
  std::vector<TrajectoryRow> rows;
  std::vector<double> f(cols.size());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = "trajectory line " + std::to_string(lineno);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const std::size_t comma = line.find(',', pos);
      const bool last = i + 1 == cols.size();
      if ((comma == std::string::npos) != last) throw ConfigError(where + ": wrong field count");
      const std::string field = line.substr(pos, last ? std::string::npos : comma - pos);
      char* end = nullptr;
      errno = 0;
      f[i] = std::strtod(field.c_str(), &end);
      if (field.empty() || *end != '\0') throw ConfigError(where + ": bad number '" + field + "'");
      pos = comma + 1;
    }
    TrajectoryRow r;
    r.step = static_cast<std::int64_t>(f[0]);
    r.t = f[1];
    Mat3 m;
    m << f[2], f[3], f[4], f[5], f[6], f[7], f[8], f[9], f[10];
    try {
      r.r_hat = RotationMatrix::from_matrix(m);
    } catch (const InvalidArgument& e) {
      throw ConfigError(where + ": " + e.what());
    }
    r.euler = {f[11], f[12], f[13]};
    r.axis_angle = Vec3(f[14], f[15], f[16]);
    r.f_h1 = Vec3(f[17], f[18], f[19]);
    r.f_h2 = Vec3(f[20], f[21], f[22]);
    r.sigma = Vec3(f[23], f[24], f[25]);
    r.trace_error = f[26];
    r.unstable_distance = f[27];
    rows.push_back(r);
  }
  return rows;
}

/// Axis·angle of every logged R̂ (recomputed from the matrix entries).
inline void write_piball_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows) {
  out << "step,t,x,y,z\n";
  char buf[128];
  for (const TrajectoryRow& r : rows) {
    const Vec3 p = to_axis_angle(r.r_hat).vector();
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(r.step), r.t, p.x(), p.y(), p.z());
    out << buf;
  }
}

// ---------------------------------------------------------------------------
// Summaries and manifest
// ---------------------------------------------------------------------------

inline json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

/// Deterministic run summary (no wall-clock fields).
inline json summary_to_json(const ScenarioConfig& c, const TrajectoryRecord& rec) {
  const RunSummary& s = rec.summary;
  return json{{"schema", kSummarySchema},
              {"trajectory_schema", kTrajectorySchemaVersion},
              {"scenario", c.name},
              {"config_hash", config_hash(c)},
              {"seed", c.seed},
              {"steps", c.steps()},
              {"rows", rec.rows.size()},
              {"outcome", std::string(to_string(s.outcome))},
              {"final_r_hat", detail::to_json(s.final_r_hat)["matrix"]},
              {"final_euler", detail::to_json(s.final_euler)},
              {"final_axis_angle", detail::to_json(to_axis_angle(s.final_r_hat).vector())},
              {"final_trace_error", s.final_trace_error},
              {"peak_trace_error", s.peak_trace_error},
              {"settled_at", optional_number(s.settled_at)},
              {"convergence_time", optional_number(s.convergence_time)},
              {"path_length", s.path_length},
              {"unstable_warnings", s.unstable_warnings}};
}

inline json montecarlo_to_json(const ScenarioConfig& c, const MonteCarloSummary& mc,
                               std::uint64_t seed) {
  return json{{"schema", kMonteCarloSchema},
              {"scenario", c.name},
              {"config_hash", config_hash(c)},
              {"seed", seed},
              {"n_runs", mc.n_runs},
              {"converged", mc.converged},
              {"converged_fraction", mc.converged_fraction},
              {"anti_aligned", mc.anti_aligned},
              {"median_settle_time", optional_number(mc.median_settle_time)},
              {"worst_final_error", mc.worst_final_error}};
}

inline void write_montecarlo_runs_csv(std::ostream& out, const MonteCarloSummary& mc) {
  out << "index,seed,outcome,converged,final_trace_error,convergence_time,"
         "r0_11,r0_12,r0_13,r0_21,r0_22,r0_23,r0_31,r0_32,r0_33\n";
  char buf[64];
  for (const MonteCarloRun& r : mc.runs) {
    std::string line = std::to_string(r.index) + "," + std::to_string(r.seed) + "," +
                       std::string(to_string(r.outcome)) + "," + (r.converged ? "1" : "0");
    std::snprintf(buf, sizeof(buf), ",%.17g", r.final_trace_error);
    line += buf;
    if (r.convergence_time) {
      std::snprintf(buf, sizeof(buf), ",%.17g", *r.convergence_time);
      line += buf;
    } else {
      line += ",";
    }
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) {
        std::snprintf(buf, sizeof(buf), ",%.17g", r.r_hat0(i, k));
        line += buf;
      }
    out << line << '\n';
  }
}

struct RunManifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string tool_version = std::string(kVersion);
  std::string started_at;
  std::string finished_at;
  std::string outcome;
  json final_metrics = json::object();
};

inline json manifest_to_json(const RunManifest& m) {
  return json{{"config_hash", m.config_hash}, {"seed", m.seed},
              {"tool_version", m.tool_version}, {"started_at", m.started_at},
              {"finished_at", m.finished_at},   {"outcome", m.outcome},
              {"final_metrics", m.final_metrics}};
}

/// Writes via a temporary file in the same directory and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace hcf::io
