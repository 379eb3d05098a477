// Copyright 2026 The skytrack authors.
// SPDX-License-Identifier: Apache-2.0

#include "skytrack/io.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace skytrack {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void store_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write '" + path.string() + "'");
  }
  out << text;
  if (!out) {
    throw IoError("write to '" + path.string() + "' failed");
  }
}

void require_keys(const ordered_json& object,
                  const std::vector<std::string>& keys,
                  const std::string& context) {
  if (!object.is_object()) {
    throw ParseError(context + ": expected an object");
  }
  std::set<std::string> expected(keys.begin(), keys.end());
  for (const auto& [key, value] : object.items()) {
    if (!expected.count(key)) {
      throw ParseError(context + ": unknown key '" + key + "'");
    }
  }
  for (const std::string& key : keys) {
    if (!object.contains(key)) {
      throw ParseError(context + ": missing key '" + key + "'");
    }
  }
}

ordered_json vec3_to_json(const Vector3d& v) {
  return ordered_json::array({v.x(), v.y(), v.z()});
}

Vector3d json_to_vec3(const ordered_json& j, const std::string& context) {
  if (!j.is_array() || j.size() != 3) {
    throw ParseError(context + ": expected a 3-element array");
  }
  return Vector3d(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

// Line-oriented table files. Each begins with a '#' header carrying the
// format name and dimensions, then a column-name line, then data rows.
struct TableReader {
  std::filesystem::path path;
  std::istringstream stream;
  int line_number = 0;

  explicit TableReader(const std::filesystem::path& p)
      : path(p), stream(load_file(p)) {}

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(path.string() + ":" + std::to_string(line_number) + ": " +
                     message);
  }

  std::string next_line() {
    std::string line;
    if (!std::getline(stream, line)) {
      fail("unexpected end of file");
    }
    ++line_number;
    return line;
  }

  bool next_data_line(std::string& line) {
    if (!std::getline(stream, line)) {
      return false;
    }
    ++line_number;
    return true;
  }

  std::vector<std::string> split(const std::string& line) const {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
      fields.push_back(field);
    }
    return fields;
  }

  double parse_double(const std::string& field) {
    char* end = nullptr;
    const double value = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0') {
      fail("invalid number '" + field + "'");
    }
    return value;
  }

  long long parse_int(const std::string& field) {
    char* end = nullptr;
    const long long value = std::strtoll(field.c_str(), &end, 10);
    if (end == field.c_str() || *end != '\0') {
      fail("invalid integer '" + field + "'");
    }
    return value;
  }

  // Header "# skytrack <name> v1 key=value ...", returns the key/value map.
  std::map<std::string, long long> read_header(const std::string& name,
                                               const std::string& columns) {
    const std::string header = next_line();
    const std::string prefix = "# skytrack " + name + " v1";
    if (header.rfind(prefix, 0) != 0) {
      fail("expected header '" + prefix + " ...'");
    }
    std::map<std::string, long long> values;
    std::istringstream rest(header.substr(prefix.size()));
    std::string token;
    while (rest >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos) {
        fail("malformed header token '" + token + "'");
      }
      values[token.substr(0, eq)] = parse_int(token.substr(eq + 1));
    }
    const std::string column_line = next_line();
    if (column_line != columns) {
      fail("expected column line '" + columns + "'");
    }
    return values;
  }
};

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

// --------------------------------------------------------------------------
// Scene files (JSON)
// --------------------------------------------------------------------------

void write_scene(const std::filesystem::path& path, const SceneData& scene) {
  ordered_json j;
  j["schema_version"] = scene.schema_version;
  j["fps"] = scene.fps;
  j["quad"] = {{"m", scene.quad.m},   {"Ix", scene.quad.Ix},
               {"Iy", scene.quad.Iy}, {"Iz", scene.quad.Iz},
               {"Jtp", 0.0},          {"g", scene.quad.g},
               {"dt", scene.quad.dt}};
  j["volume"] = {{"min", vec3_to_json(scene.volume.min)},
                 {"max", vec3_to_json(scene.volume.max)}};
  ordered_json cameras = ordered_json::array();
  for (const Camera& cam : scene.cameras) {
    ordered_json c;
    c["id"] = cam.id;
    c["intrinsics"] = {{"fx", cam.intrinsics.fx},
                       {"fy", cam.intrinsics.fy},
                       {"cx", cam.intrinsics.cx},
                       {"cy", cam.intrinsics.cy},
                       {"k1", cam.intrinsics.k1},
                       {"k2", cam.intrinsics.k2},
                       {"width", cam.intrinsics.width},
                       {"height", cam.intrinsics.height}};
    c["rotation"] = ordered_json::array({cam.rotation.w(), cam.rotation.x(),
                                         cam.rotation.y(), cam.rotation.z()});
    c["translation"] = vec3_to_json(cam.translation);
    cameras.push_back(std::move(c));
  }
  j["cameras"] = std::move(cameras);
  store_file(path, j.dump(2) + "\n");
}

SceneData read_scene(const std::filesystem::path& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(load_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  const std::string context = path.string();
  require_keys(j, {"schema_version", "fps", "quad", "volume", "cameras"},
               context);

  SceneData scene;
  scene.schema_version = j["schema_version"].get<int>();
  if (scene.schema_version != 1) {
    throw ParseError(context + ": unsupported schema version " +
                     std::to_string(scene.schema_version));
  }
  scene.fps = j["fps"].get<double>();
  if (scene.fps <= 0.0) {
    throw ParseError(context + ": fps must be positive");
  }

  require_keys(j["quad"], {"m", "Ix", "Iy", "Iz", "Jtp", "g", "dt"},
               context + ": quad");
  scene.quad.m = j["quad"]["m"].get<double>();
  scene.quad.Ix = j["quad"]["Ix"].get<double>();
  scene.quad.Iy = j["quad"]["Iy"].get<double>();
  scene.quad.Iz = j["quad"]["Iz"].get<double>();
  scene.quad.g = j["quad"]["g"].get<double>();
  scene.quad.dt = j["quad"]["dt"].get<double>();
  if (j["quad"]["Jtp"].get<double>() != 0.0) {
    throw ParseError(context + ": Jtp must be 0");
  }
  if (scene.quad.m <= 0.0 || scene.quad.Ix <= 0.0 || scene.quad.Iy <= 0.0 ||
      scene.quad.Iz <= 0.0 || scene.quad.dt <= 0.0) {
    throw ParseError(context + ": quad parameters must be positive");
  }

  require_keys(j["volume"], {"min", "max"}, context + ": volume");
  scene.volume.min = json_to_vec3(j["volume"]["min"], context + ": volume.min");
  scene.volume.max = json_to_vec3(j["volume"]["max"], context + ": volume.max");

  if (!j["cameras"].is_array()) {
    throw ParseError(context + ": cameras must be an array");
  }
  for (const auto& c : j["cameras"]) {
    const std::string cam_context = context + ": camera";
    require_keys(c, {"id", "intrinsics", "rotation", "translation"},
                 cam_context);
    Camera cam;
    cam.id = c["id"].get<int>();
    require_keys(c["intrinsics"],
                 {"fx", "fy", "cx", "cy", "k1", "k2", "width", "height"},
                 cam_context + ".intrinsics");
    cam.intrinsics.fx = c["intrinsics"]["fx"].get<double>();
    cam.intrinsics.fy = c["intrinsics"]["fy"].get<double>();
    cam.intrinsics.cx = c["intrinsics"]["cx"].get<double>();
    cam.intrinsics.cy = c["intrinsics"]["cy"].get<double>();
    cam.intrinsics.k1 = c["intrinsics"]["k1"].get<double>();
    cam.intrinsics.k2 = c["intrinsics"]["k2"].get<double>();
    cam.intrinsics.width = c["intrinsics"]["width"].get<int>();
    cam.intrinsics.height = c["intrinsics"]["height"].get<int>();
    const auto& r = c["rotation"];
    if (!r.is_array() || r.size() != 4) {
      throw ParseError(cam_context + ".rotation: expected [w, x, y, z]");
    }
    cam.rotation = Quaterniond(r[0].get<double>(), r[1].get<double>(),
                               r[2].get<double>(), r[3].get<double>());
    cam.translation = json_to_vec3(c["translation"],
                                   cam_context + ".translation");
    cam.validate();
    scene.cameras.push_back(cam);
  }
  return scene;
}

// --------------------------------------------------------------------------
// Detections
// --------------------------------------------------------------------------

void write_detections(const std::filesystem::path& path,
                      const ObservationTable& table) {
  std::ostringstream out;
  out << "# skytrack detections v1 cameras=" << table.num_cameras()
      << " frames=" << table.num_frames() << "\n";
  out << "camera_id,frame,candidate_index,px,py\n";
  for (int cam = 0; cam < table.num_cameras(); ++cam) {
    for (int t = 0; t < table.num_frames(); ++t) {
      const auto& set = table.candidates(cam, t);
      for (size_t k = 0; k < set.size(); ++k) {
        out << cam << ',' << (t + 1) << ',' << k << ','
            << format_double(set[k].x()) << ',' << format_double(set[k].y())
            << "\n";
      }
    }
  }
  store_file(path, out.str());
}

ObservationTable read_detections(const std::filesystem::path& path) {
  TableReader reader(path);
  const auto header = reader.read_header(
      "detections", "camera_id,frame,candidate_index,px,py");
  const int m_count = static_cast<int>(header.at("cameras"));
  const int t_count = static_cast<int>(header.at("frames"));
  if (m_count <= 0 || t_count <= 0) {
    reader.fail("non-positive table dimensions");
  }
  ObservationTable table(m_count, t_count);

  std::string line;
  while (reader.next_data_line(line)) {
    if (line.empty()) {
      continue;
    }
    const auto fields = reader.split(line);
    if (fields.size() != 5) {
      reader.fail("expected 5 fields, got " + std::to_string(fields.size()));
    }
    const long long cam = reader.parse_int(fields[0]);
    const long long frame = reader.parse_int(fields[1]);
    const long long index = reader.parse_int(fields[2]);
    if (cam < 0 || cam >= m_count) {
      reader.fail("camera_id out of range");
    }
    if (frame < 1 || frame > t_count) {
      reader.fail("frame out of range");
    }
    auto& set = table.candidates(static_cast<int>(cam),
                                 static_cast<int>(frame - 1));
    if (index != static_cast<long long>(set.size())) {
      reader.fail("candidate_index not contiguous");
    }
    if (set.size() >= static_cast<size_t>(kCandidateCap)) {
      reader.fail("candidate cap exceeded");
    }
    const double px = reader.parse_double(fields[3]);
    const double py = reader.parse_double(fields[4]);
    if (!std::isfinite(px) || !std::isfinite(py)) {
      reader.fail("non-finite pixel coordinates");
    }
    set.emplace_back(px, py);
  }
  return table;
}

// --------------------------------------------------------------------------
// Trajectory / latent / controls / assignment tables
// --------------------------------------------------------------------------

void write_trajectory(const std::filesystem::path& path,
                      const Trajectory& trajectory) {
  std::ostringstream out;
  out << "# skytrack trajectory v1 frames=" << trajectory.size() << "\n";
  out << "frame,x,y,z\n";
  for (int t = 0; t < trajectory.size(); ++t) {
    const Vector3d& p = trajectory.positions[t];
    out << (t + 1) << ',' << format_double(p.x()) << ','
        << format_double(p.y()) << ',' << format_double(p.z()) << "\n";
  }
  store_file(path, out.str());
}

Trajectory read_trajectory(const std::filesystem::path& path, double dt) {
  TableReader reader(path);
  const auto header = reader.read_header("trajectory", "frame,x,y,z");
  const int t_count = static_cast<int>(header.at("frames"));
  Trajectory trajectory;
  trajectory.dt = dt;
  trajectory.positions.reserve(t_count);

  std::string line;
  int expected_frame = 1;
  while (reader.next_data_line(line)) {
    if (line.empty()) {
      continue;
    }
    const auto fields = reader.split(line);
    if (fields.size() != 4) {
      reader.fail("expected 4 fields");
    }
    if (reader.parse_int(fields[0]) != expected_frame) {
      reader.fail("frame column must increase strictly from 1");
    }
    trajectory.positions.emplace_back(reader.parse_double(fields[1]),
                                      reader.parse_double(fields[2]),
                                      reader.parse_double(fields[3]));
    ++expected_frame;
  }
  if (trajectory.size() != t_count) {
    throw ParseError(path.string() + ": expected " + std::to_string(t_count) +
                     " rows, got " + std::to_string(trajectory.size()));
  }
  return trajectory;
}

void write_latent(const std::filesystem::path& path,
                  const LatentSequence& latent) {
  std::ostringstream out;
  out << "# skytrack latent v1 frames=" << latent.size() << "\n";
  out << "frame,phi,theta,u\n";
  for (int t = 0; t < latent.size(); ++t) {
    out << (t + 1) << ',' << format_double(latent.phi[t]) << ','
        << format_double(latent.theta[t]) << ',' << format_double(latent.u[t])
        << "\n";
  }
  store_file(path, out.str());
}

LatentSequence read_latent(const std::filesystem::path& path) {
  TableReader reader(path);
  const auto header = reader.read_header("latent", "frame,phi,theta,u");
  const int t_count = static_cast<int>(header.at("frames"));
  LatentSequence latent;

  std::string line;
  int expected_frame = 1;
  while (reader.next_data_line(line)) {
    if (line.empty()) {
      continue;
    }
    const auto fields = reader.split(line);
    if (fields.size() != 4) {
      reader.fail("expected 4 fields");
    }
    if (reader.parse_int(fields[0]) != expected_frame) {
      reader.fail("frame column must increase strictly from 1");
    }
    latent.push_back({reader.parse_double(fields[1]),
                      reader.parse_double(fields[2]),
                      reader.parse_double(fields[3])});
    ++expected_frame;
  }
  if (latent.size() != t_count) {
    throw ParseError(path.string() + ": row count mismatch");
  }
  return latent;
}

void write_controls(const std::filesystem::path& path,
                    const ControlSequence& controls) {
  std::ostringstream out;
  out << "# skytrack controls v1 frames=" << controls.size() << "\n";
  out << "frame,u_phi,u_theta\n";
  for (int t = 0; t < controls.size(); ++t) {
    out << (t + 1) << ',' << format_double(controls.u_phi[t]) << ','
        << format_double(controls.u_theta[t]) << "\n";
  }
  store_file(path, out.str());
}

ControlSequence read_controls(const std::filesystem::path& path) {
  TableReader reader(path);
  const auto header = reader.read_header("controls", "frame,u_phi,u_theta");
  const int t_count = static_cast<int>(header.at("frames"));
  ControlSequence controls;

  std::string line;
  int expected_frame = 1;
  while (reader.next_data_line(line)) {
    if (line.empty()) {
      continue;
    }
    const auto fields = reader.split(line);
    if (fields.size() != 3) {
      reader.fail("expected 3 fields");
    }
    if (reader.parse_int(fields[0]) != expected_frame) {
      reader.fail("frame column must increase strictly from 1");
    }
    controls.u_phi.push_back(reader.parse_double(fields[1]));
    controls.u_theta.push_back(reader.parse_double(fields[2]));
    ++expected_frame;
  }
  if (controls.size() != t_count) {
    throw ParseError(path.string() + ": row count mismatch");
  }
  return controls;
}

void write_assignment(const std::filesystem::path& path,
                      const Assignment& assignment) {
  std::ostringstream out;
  out << "# skytrack assignment v1 cameras=" << assignment.num_cameras()
      << " frames=" << assignment.num_frames() << "\n";
  out << "camera_id,frame,candidate_index\n";
  for (int cam = 0; cam < assignment.num_cameras(); ++cam) {
    for (int t = 0; t < assignment.num_frames(); ++t) {
      out << cam << ',' << (t + 1) << ',' << assignment.at(cam, t) << "\n";
    }
  }
  store_file(path, out.str());
}

Assignment read_assignment(const std::filesystem::path& path) {
  TableReader reader(path);
  const auto header =
      reader.read_header("assignment", "camera_id,frame,candidate_index");
  const int m_count = static_cast<int>(header.at("cameras"));
  const int t_count = static_cast<int>(header.at("frames"));
  Assignment assignment(m_count, t_count);

  std::string line;
  while (reader.next_data_line(line)) {
    if (line.empty()) {
      continue;
    }
    const auto fields = reader.split(line);
    if (fields.size() != 3) {
      reader.fail("expected 3 fields");
    }
    const long long cam = reader.parse_int(fields[0]);
    const long long frame = reader.parse_int(fields[1]);
    if (cam < 0 || cam >= m_count || frame < 1 || frame > t_count) {
      reader.fail("camera/frame out of range");
    }
    assignment.at(static_cast<int>(cam), static_cast<int>(frame - 1)) =
        static_cast<std::int32_t>(reader.parse_int(fields[2]));
  }
  return assignment;
}

// --------------------------------------------------------------------------
// Energy trace, sweep tables, metrics
// --------------------------------------------------------------------------

void write_energy_trace(const std::filesystem::path& path,
                        const std::vector<TraceRow>& trace) {
  std::ostringstream out;
  out << "# skytrack energy_trace v1 rows=" << trace.size() << "\n";
  out << "iteration,accepted,attempts,damping,data,consistency,anchor_phi,"
         "anchor_theta,anchor_u,total_before,total_after\n";
  for (const TraceRow& row : trace) {
    out << row.iteration << ',' << (row.accepted ? 1 : 0) << ','
        << row.attempts << ',' << format_double(row.damping) << ','
        << format_double(row.after.data) << ','
        << format_double(row.after.consistency) << ','
        << format_double(row.after.anchor_phi) << ','
        << format_double(row.after.anchor_theta) << ','
        << format_double(row.after.anchor_u) << ','
        << format_double(row.before.total()) << ','
        << format_double(row.after.total()) << "\n";
  }
  store_file(path, out.str());
}

void write_sweep_rows(const std::filesystem::path& path,
                      const SweepResult& result) {
  std::ostringstream out;
  out << "# skytrack sweep v1 rows=" << result.rows.size() << "\n";
  out << "method,sigma_p,sigma_o,seed,rmse,runtime_s\n";
  for (const SweepRow& row : result.rows) {
    out << method_name(row.method) << ',' << format_double(row.sigma_p) << ','
        << format_double(row.sigma_o) << ',' << row.seed << ','
        << format_double(row.rmse) << ',' << format_double(row.runtime_s)
        << "\n";
  }
  store_file(path, out.str());
}

SweepResult read_sweep_rows(const std::filesystem::path& path) {
  TableReader reader(path);
  reader.read_header("sweep", "method,sigma_p,sigma_o,seed,rmse,runtime_s");
  SweepResult result;
  std::string line;
  while (reader.next_data_line(line)) {
    if (line.empty()) {
      continue;
    }
    const auto fields = reader.split(line);
    if (fields.size() != 6) {
      reader.fail("expected 6 fields");
    }
    SweepRow row;
    row.method = parse_method(fields[0]);
    row.sigma_p = reader.parse_double(fields[1]);
    row.sigma_o = reader.parse_double(fields[2]);
    row.seed = static_cast<std::uint64_t>(reader.parse_int(fields[3]));
    row.rmse = reader.parse_double(fields[4]);
    row.runtime_s = reader.parse_double(fields[5]);
    result.rows.push_back(row);
  }
  return result;
}

void write_sweep_summary(const std::filesystem::path& path,
                         const SweepResult& result) {
  std::set<std::pair<double, double>> cells;
  std::set<std::string> method_names;
  std::vector<Method> methods;
  for (const SweepRow& row : result.rows) {
    cells.insert({row.sigma_p, row.sigma_o});
    if (method_names.insert(method_name(row.method)).second) {
      methods.push_back(row.method);
    }
  }

  std::ostringstream out;
  out << "sweep summary (" << result.rows.size() << " rows)\n\n";
  out << "per-method RMSE over all cells:\n";
  for (Method method : methods) {
    out << "  " << method_name(method) << ": mean "
        << format_double(result.mean_rmse(method)) << " m, std "
        << format_double(result.std_rmse(method)) << " m\n";
  }
  if (cells.size() > 1) {
    out << "\nper-cell mean RMSE:\n";
    for (const auto& [sp, so] : cells) {
      out << "  sigma_p=" << format_double(sp)
          << " sigma_o=" << format_double(so) << ":";
      for (Method method : methods) {
        out << ' ' << method_name(method) << '='
            << format_double(result.mean_rmse(method, sp, so));
      }
      out << "\n";
    }
  }
  store_file(path, out.str());
}

void write_sensitivity_table(const std::filesystem::path& path,
                             const std::vector<SensitivityCell>& cells) {
  std::ostringstream out;
  out << "# skytrack sensitivity v1 rows=" << cells.size() << "\n";
  out << "lambda,sigma,rmse,rmse_u,rmse_phi,rmse_theta,correlation_u,"
         "hf_energy_u\n";
  for (const SensitivityCell& cell : cells) {
    out << format_double(cell.lambda) << ',' << format_double(cell.sigma)
        << ',' << format_double(cell.rmse) << ','
        << format_double(cell.metrics.rmse_u) << ','
        << format_double(cell.metrics.rmse_phi) << ','
        << format_double(cell.metrics.rmse_theta) << ','
        << format_double(cell.metrics.correlation_u) << ','
        << format_double(cell.metrics.hf_energy_u) << "\n";
  }
  store_file(path, out.str());
}

std::vector<SensitivityCell> read_sensitivity_table(
    const std::filesystem::path& path) {
  TableReader reader(path);
  reader.read_header("sensitivity",
                     "lambda,sigma,rmse,rmse_u,rmse_phi,rmse_theta,"
                     "correlation_u,hf_energy_u");
  std::vector<SensitivityCell> cells;
  std::string line;
  while (reader.next_data_line(line)) {
    if (line.empty()) {
      continue;
    }
    const auto fields = reader.split(line);
    if (fields.size() != 8) {
      reader.fail("expected 8 fields");
    }
    SensitivityCell cell;
    cell.lambda = reader.parse_double(fields[0]);
    cell.sigma = reader.parse_double(fields[1]);
    cell.rmse = reader.parse_double(fields[2]);
    cell.metrics.rmse_u = reader.parse_double(fields[3]);
    cell.metrics.rmse_phi = reader.parse_double(fields[4]);
    cell.metrics.rmse_theta = reader.parse_double(fields[5]);
    cell.metrics.correlation_u = reader.parse_double(fields[6]);
    cell.metrics.hf_energy_u = reader.parse_double(fields[7]);
    cells.push_back(cell);
  }
  return cells;
}

void write_metrics(const std::filesystem::path& path,
                   const TrajectoryMetrics& metrics,
                   const std::optional<ControlMetrics>& control) {
  ordered_json j;
  j["rmse"] = metrics.rmse;
  ordered_json curve = ordered_json::array();
  for (const auto& [threshold, fraction] : metrics.threshold_curve) {
    curve.push_back(ordered_json::array({threshold, fraction}));
  }
  j["threshold_curve"] = std::move(curve);
  if (control) {
    j["control"] = {{"rmse_u", control->rmse_u},
                    {"rmse_phi", control->rmse_phi},
                    {"rmse_theta", control->rmse_theta},
                    {"correlation_u", control->correlation_u},
                    {"hf_energy_u", control->hf_energy_u}};
  }
  store_file(path, j.dump(2) + "\n");
}

// --------------------------------------------------------------------------
// Run configuration files
// --------------------------------------------------------------------------

namespace {

// Unknown keys rejected; missing keys keep their defaults.
void require_subset(const ordered_json& object,
                    const std::vector<std::string>& keys,
                    const std::string& context) {
  if (!object.is_object()) {
    throw ParseError(context + ": expected an object");
  }
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : object.items()) {
    if (!allowed.count(key)) {
      throw ParseError(context + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
T get_or(const ordered_json& object, const std::string& key, T fallback) {
  if (object.contains(key)) {
    return object[key].get<T>();
  }
  return fallback;
}

std::vector<double> get_grid(const ordered_json& object,
                             const std::string& key,
                             const std::string& context) {
  if (!object.contains(key)) {
    return {};
  }
  if (!object[key].is_array()) {
    throw ParseError(context + ": '" + key + "' must be an array");
  }
  std::vector<double> grid;
  for (const auto& v : object[key]) {
    grid.push_back(v.get<double>());
  }
  return grid;
}

SimConfig parse_sim_config(const ordered_json& j, const std::string& context) {
  require_subset(j,
                 {"frames", "fps", "cameras", "volume", "waypoints", "seed",
                  "candidate_cap", "quad", "noise", "perturb"},
                 context);
  SimConfig cfg;
  cfg.frames = get_or(j, "frames", cfg.frames);
  cfg.fps = get_or(j, "fps", cfg.fps);
  cfg.n_cameras = get_or(j, "cameras", cfg.n_cameras);
  cfg.waypoints = get_or(j, "waypoints", cfg.waypoints);
  cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
  cfg.candidate_cap = get_or(j, "candidate_cap", cfg.candidate_cap);
  if (cfg.frames < 3 || cfg.n_cameras < 2 || cfg.fps <= 0.0) {
    throw ParseError(context +
                     ": need frames >= 3, cameras >= 2, fps > 0");
  }
  if (j.contains("volume")) {
    require_keys(j["volume"], {"min", "max"}, context + ": volume");
    cfg.volume.min = json_to_vec3(j["volume"]["min"], context + ": volume.min");
    cfg.volume.max = json_to_vec3(j["volume"]["max"], context + ": volume.max");
  }
  if (j.contains("quad")) {
    require_subset(j["quad"], {"m", "Ix", "Iy", "Iz", "g"}, context + ": quad");
    cfg.quad.m = get_or(j["quad"], "m", cfg.quad.m);
    cfg.quad.Ix = get_or(j["quad"], "Ix", cfg.quad.Ix);
    cfg.quad.Iy = get_or(j["quad"], "Iy", cfg.quad.Iy);
    cfg.quad.Iz = get_or(j["quad"], "Iz", cfg.quad.Iz);
    cfg.quad.g = get_or(j["quad"], "g", cfg.quad.g);
  }
  cfg.quad.dt = 1.0 / cfg.fps;
  if (j.contains("noise")) {
    require_subset(j["noise"],
                   {"sigma_px", "miss_rate", "outlier_max", "outlier_model",
                    "clutter_sigma_px"},
                   context + ": noise");
    cfg.noise.sigma_px = get_or(j["noise"], "sigma_px", cfg.noise.sigma_px);
    cfg.noise.miss_rate = get_or(j["noise"], "miss_rate", cfg.noise.miss_rate);
    cfg.noise.outlier_max =
        get_or(j["noise"], "outlier_max", cfg.noise.outlier_max);
    cfg.noise.clutter_sigma_px =
        get_or(j["noise"], "clutter_sigma_px", cfg.noise.clutter_sigma_px);
    const std::string model =
        get_or<std::string>(j["noise"], "outlier_model", "uniform");
    if (model == "uniform") {
      cfg.noise.outlier_model = OutlierModel::kUniformImage;
    } else if (model == "near_target") {
      cfg.noise.outlier_model = OutlierModel::kNearTarget;
    } else {
      throw ParseError(context + ": unknown outlier_model '" + model + "'");
    }
    if (cfg.noise.miss_rate < 0.0 || cfg.noise.miss_rate > 1.0 ||
        cfg.noise.outlier_max < 0 ||
        cfg.noise.outlier_max > cfg.candidate_cap) {
      throw ParseError(context + ": noise parameters out of range");
    }
  }
  if (j.contains("perturb")) {
    require_subset(j["perturb"],
                   {"sigma_position", "sigma_orientation_deg",
                    "keep_first_fixed"},
                   context + ": perturb");
    cfg.perturb.sigma_position =
        get_or(j["perturb"], "sigma_position", cfg.perturb.sigma_position);
    cfg.perturb.sigma_orientation_deg = get_or(
        j["perturb"], "sigma_orientation_deg", cfg.perturb.sigma_orientation_deg);
    cfg.perturb.keep_first_fixed =
        get_or(j["perturb"], "keep_first_fixed", cfg.perturb.keep_first_fixed);
  }
  return cfg;
}

void parse_solver_overrides(const ordered_json& j, const std::string& context,
                            SolverConfig* solver) {
  require_subset(j,
                 {"lambda", "lambda_phi", "lambda_theta", "lambda_u",
                  "iterations", "sigma_gs", "knot_spacing", "kalman_q",
                  "kalman_r", "sigma_latent", "huber_px", "huber_angle",
                  "huber_u"},
                 context);
  solver->lambda = get_or(j, "lambda", solver->lambda);
  solver->lambda_phi = get_or(j, "lambda_phi", solver->lambda_phi);
  solver->lambda_theta = get_or(j, "lambda_theta", solver->lambda_theta);
  solver->lambda_u = get_or(j, "lambda_u", solver->lambda_u);
  solver->outer_iterations = get_or(j, "iterations", solver->outer_iterations);
  solver->prior.sigma = get_or(j, "sigma_gs", solver->prior.sigma);
  solver->prior.knot_spacing =
      get_or(j, "knot_spacing", solver->prior.knot_spacing);
  solver->prior.kalman_q = get_or(j, "kalman_q", solver->prior.kalman_q);
  solver->prior.kalman_r = get_or(j, "kalman_r", solver->prior.kalman_r);
  solver->prior.sigma_latent =
      get_or(j, "sigma_latent", solver->prior.sigma_latent);
  if (j.contains("huber_px")) {
    solver->pixel_loss = RobustLoss::huber(j["huber_px"].get<double>());
  }
  if (j.contains("huber_angle")) {
    solver->phi_loss = RobustLoss::huber(j["huber_angle"].get<double>());
    solver->theta_loss = solver->phi_loss;
  }
  if (j.contains("huber_u")) {
    solver->u_loss = RobustLoss::huber(j["huber_u"].get<double>());
  }
}

}  // namespace

SimConfig read_sim_config(const std::filesystem::path& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(load_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return parse_sim_config(j, path.string());
}

SweepSpec read_sweep_spec(const std::filesystem::path& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(load_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  const std::string context = path.string();
  require_subset(j,
                 {"mode", "scene", "methods", "seeds", "sigma_p_grid",
                  "sigma_o_grid", "lambda_grid", "sigma_grid", "solver",
                  "ransac_iterations", "init_position_noise"},
                 context);
  SweepSpec spec;
  spec.mode = get_or<std::string>(j, "mode", spec.mode);
  if (spec.mode != "methods" && spec.mode != "noise" &&
      spec.mode != "sensitivity") {
    throw ParseError(context + ": unknown mode '" + spec.mode + "'");
  }
  if (!j.contains("scene")) {
    throw ParseError(context + ": missing 'scene'");
  }
  spec.scene = parse_sim_config(j["scene"], context + ": scene");

  if (j.contains("methods")) {
    for (const auto& name : j["methods"]) {
      spec.methods.push_back(parse_method(name.get<std::string>()));
    }
  } else {
    spec.methods = {Method::kNoOpt, Method::kBA, Method::kBApGS,
                    Method::kBApSS, Method::kBApKF, Method::kBApDM};
  }
  if (j.contains("seeds")) {
    for (const auto& s : j["seeds"]) {
      spec.seeds.push_back(s.get<std::uint64_t>());
    }
  } else {
    for (std::uint64_t s = 1; s <= 10; ++s) {
      spec.seeds.push_back(s);
    }
  }
  spec.sigma_p_grid = get_grid(j, "sigma_p_grid", context);
  spec.sigma_o_grid = get_grid(j, "sigma_o_grid", context);
  spec.lambda_grid = get_grid(j, "lambda_grid", context);
  spec.sigma_grid = get_grid(j, "sigma_grid", context);
  if (j.contains("solver")) {
    parse_solver_overrides(j["solver"], context + ": solver",
                           &spec.run.solver);
  }
  spec.run.ransac_iterations =
      get_or(j, "ransac_iterations", spec.run.ransac_iterations);
  spec.run.init_position_noise =
      get_or(j, "init_position_noise", spec.run.init_position_noise);
  return spec;
}

// --------------------------------------------------------------------------
// Hashing and manifests
// --------------------------------------------------------------------------

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
  const std::string bytes = load_file(path);
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016" PRIx64, value);
  return buffer;
}

void write_manifest(const std::filesystem::path& out_dir,
                    const std::string& command, std::uint64_t seed,
                    const std::string& config_echo,
                    const std::vector<std::filesystem::path>& outputs) {
  ordered_json j;
  j["command"] = command;
  j["seed"] = seed;
  j["config"] = config_echo;
  ordered_json files = ordered_json::array();
  for (const auto& path : outputs) {
    files.push_back({{"file", path.filename().string()},
                     {"fnv1a64", hex64(fnv1a64_file(path))}});
  }
  j["outputs"] = std::move(files);
  store_file(out_dir / "manifest.json", j.dump(2) + "\n");
}

}  // namespace skytrack
