#include "fgpl/json_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fgpl {

void JsonWriter::pre_value() {
  if (!stack_.empty() && !pending_key_) {
    if (stack_.back().second++ > 0) out_ += ',';
    if (stack_.back().first == 'a') newline_indent();
  }
  pending_key_ = false;
}

void JsonWriter::newline_indent() {
  out_ += '\n';
  out_.append(2 * stack_.size(), ' ');
}

void JsonWriter::begin_object() {
  pre_value();
  out_ += '{';
  stack_.emplace_back('o', 0);
}

void JsonWriter::end_object() {
  const int children = stack_.back().second;
  stack_.pop_back();
  if (children > 0) newline_indent();
  out_ += '}';
}

void JsonWriter::begin_array() {
  pre_value();
  out_ += '[';
  stack_.emplace_back('a', 0);
}

void JsonWriter::end_array() {
  const int children = stack_.back().second;
  stack_.pop_back();
  if (children > 0) newline_indent();
  out_ += ']';
}

void JsonWriter::key(const std::string& name) {
  if (stack_.back().second++ > 0) out_ += ',';
  newline_indent();
  out_ += '"';
  out_ += name;
  out_ += "\": ";
  pending_key_ = true;
}

void JsonWriter::value(double v) {
  pre_value();
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out_ += buf;
}

void JsonWriter::value(long v) {
  pre_value();
  out_ += std::to_string(v);
}

void JsonWriter::value(unsigned long v) {
  pre_value();
  out_ += std::to_string(v);
}

void JsonWriter::value(bool v) {
  pre_value();
  out_ += v ? "true" : "false";
}

void JsonWriter::value(const std::string& v) {
  pre_value();
  out_ += '"';
  for (char c : v) {
    switch (c) {
      case '"': out_ += "\\\""; break;
      case '\\': out_ += "\\\\"; break;
      case '\n': out_ += "\\n"; break;
      case '\t': out_ += "\\t"; break;
      default: out_ += c;
    }
  }
  out_ += '"';
}

void JsonWriter::null_value() {
  pre_value();
  out_ += "null";
}

// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw IoError("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

void check_version(const json& j, const std::string& path) {
  if (!j.contains("format_version") || j["format_version"].get<int>() != 1) {
    throw IoError("unsupported format_version in " + path);
  }
}

void write_segment_array(JsonWriter& w, const Vec3& a, const Vec3& b) {
  w.begin_array();
  for (int i = 0; i < 3; ++i) w.value(a(i));
  for (int i = 0; i < 3; ++i) w.value(b(i));
  w.end_array();
}

void write_pose(JsonWriter& w, const Pose& pose) {
  w.begin_object();
  w.key("rotation");
  w.begin_array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) w.value(pose.rotation.matrix()(r, c));
  }
  w.end_array();
  w.key("translation");
  w.begin_array();
  for (int i = 0; i < 3; ++i) w.value(pose.translation(i));
  w.end_array();
  w.end_object();
}

Pose parse_pose(const json& j) {
  const auto rot = j.at("rotation").get<std::vector<double>>();
  const auto tr = j.at("translation").get<std::vector<double>>();
  if (rot.size() != 9 || tr.size() != 3) throw IoError("malformed pose");
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m(r, c) = rot[3 * r + c];
  }
  return Pose{Rotation::from_matrix(m), Vec3(tr[0], tr[1], tr[2])};
}

std::vector<Segment3D> parse_segments_3d(const json& rows) {
  std::vector<Segment3D> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    const auto v = row.get<std::vector<double>>();
    if (v.size() != 6) throw IoError("line rows must have 6 numbers");
    out.emplace_back(Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5]));
  }
  return out;
}

std::vector<SphericalSegment> parse_segments_2d(const json& rows) {
  std::vector<SphericalSegment> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    const auto v = row.get<std::vector<double>>();
    if (v.size() != 6) throw IoError("line rows must have 6 numbers");
    const Vec3 s(v[0], v[1], v[2]);
    const Vec3 e(v[3], v[4], v[5]);
    if (std::abs(s.norm() - 1.0) > 1e-6 || std::abs(e.norm() - 1.0) > 1e-6) {
      throw IoError("2D line endpoints must be unit vectors");
    }
    out.emplace_back(UnitVector::normalized(s), UnitVector::normalized(e));
  }
  return out;
}

}  // namespace

std::vector<Segment3D> read_map_json(const std::string& path) {
  const json j = parse_file(path);
  check_version(j, path);
  return parse_segments_3d(j.at("lines"));
}

void write_map_json(const std::string& path, const std::vector<Segment3D>& lines) {
  JsonWriter w;
  w.begin_object();
  w.key("format_version");
  w.value(1L);
  w.key("lines");
  w.begin_array();
  for (const auto& seg : lines) write_segment_array(w, seg.start(), seg.end());
  w.end_array();
  w.end_object();
  write_text_file(path, w.str() + "\n");
}

std::vector<SphericalSegment> read_query_json(const std::string& path) {
  const json j = parse_file(path);
  check_version(j, path);
  return parse_segments_2d(j.at("lines"));
}

void write_query_json(const std::string& path, const std::vector<SphericalSegment>& lines) {
  JsonWriter w;
  w.begin_object();
  w.key("format_version");
  w.value(1L);
  w.key("lines");
  w.begin_array();
  for (const auto& seg : lines) write_segment_array(w, seg.start().vec(), seg.end().vec());
  w.end_array();
  w.end_object();
  write_text_file(path, w.str() + "\n");
}

SyntheticScene read_scene_json(const std::string& path) {
  const json j = parse_file(path);
  check_version(j, path);
  SyntheticScene scene;
  scene.seed = j.at("seed").get<std::uint64_t>();
  const auto room = j.at("room").get<std::vector<double>>();
  if (room.size() != 3) throw IoError("scene room must have 3 dims");
  scene.room_size = Vec3(room[0], room[1], room[2]);
  const auto& noise = j.at("noise");
  scene.noise.sigma_rad = noise.at("sigma_rad").get<double>();
  scene.noise.dropout = noise.at("dropout").get<double>();
  scene.noise.clutter = noise.at("clutter").get<double>();
  scene.gt_pose = parse_pose(j.at("gt_pose"));
  scene.lines3d = parse_segments_3d(j.at("lines3d"));
  scene.lines2d = parse_segments_2d(j.at("lines2d"));
  return scene;
}

void write_scene_json(const std::string& path, const SyntheticScene& scene) {
  JsonWriter w;
  w.begin_object();
  w.key("format_version");
  w.value(1L);
  w.key("seed");
  w.value(static_cast<unsigned long>(scene.seed));
  w.key("room");
  w.begin_array();
  for (int i = 0; i < 3; ++i) w.value(scene.room_size(i));
  w.end_array();
  w.key("noise");
  w.begin_object();
  w.key("sigma_rad");
  w.value(scene.noise.sigma_rad);
  w.key("dropout");
  w.value(scene.noise.dropout);
  w.key("clutter");
  w.value(scene.noise.clutter);
  w.end_object();
  w.key("gt_pose");
  write_pose(w, scene.gt_pose);
  w.key("lines3d");
  w.begin_array();
  for (const auto& seg : scene.lines3d) write_segment_array(w, seg.start(), seg.end());
  w.end_array();
  w.key("lines2d");
  w.begin_array();
  for (const auto& seg : scene.lines2d) {
    write_segment_array(w, seg.start().vec(), seg.end().vec());
  }
  w.end_array();
  w.end_object();
  write_text_file(path, w.str() + "\n");
}

namespace {

void write_report_body(JsonWriter& w, const LocalizationReport& report,
                       bool with_timings) {
  w.begin_object();
  w.key("format_version");
  w.value(1L);
  w.key("success");
  w.value(report.success);
  w.key("failure_stage");
  if (report.failure_stage.empty()) {
    w.null_value();
  } else {
    w.value(report.failure_stage);
  }
  w.key("error");
  if (report.error.empty()) {
    w.null_value();
  } else {
    w.value(report.error);
  }
  w.key("pose");
  write_pose(w, report.pose);
  w.key("search_cost");
  w.value(report.search_cost);
  w.key("match_count");
  w.value(long(report.match_count));
  w.key("t_error_m");
  if (report.t_error_m) {
    w.value(*report.t_error_m);
  } else {
    w.null_value();
  }
  w.key("r_error_deg");
  if (report.r_error_deg) {
    w.value(*report.r_error_deg);
  } else {
    w.null_value();
  }
  w.key("trans_cost_history");
  w.begin_array();
  for (double c : report.trans_cost_history) w.value(c);
  w.end_array();
  w.key("rot_cost_history");
  w.begin_array();
  for (double c : report.rot_cost_history) w.value(c);
  w.end_array();
  if (with_timings) {
    w.key("timings_ms");
    w.begin_object();
    w.key("prep");
    w.value(report.timings.prep_ms);
    w.key("search");
    w.value(report.timings.search_ms);
    w.key("refine");
    w.value(report.timings.refine_ms);
    w.key("total");
    w.value(report.timings.total_ms);
    w.end_object();
  }
  w.end_object();
}

}  // namespace

std::string localization_report_to_json(const LocalizationReport& report) {
  JsonWriter w;
  write_report_body(w, report, true);
  return w.str() + "\n";
}

LocalizationReport read_localization_report(const std::string& path) {
  const json j = parse_file(path);
  check_version(j, path);
  LocalizationReport report;
  report.success = j.at("success").get<bool>();
  if (!j.at("failure_stage").is_null()) {
    report.failure_stage = j.at("failure_stage").get<std::string>();
  }
  if (!j.at("error").is_null()) report.error = j.at("error").get<std::string>();
  report.pose = parse_pose(j.at("pose"));
  report.search_cost = j.at("search_cost").get<long>();
  report.match_count = j.at("match_count").get<int>();
  if (!j.at("t_error_m").is_null()) report.t_error_m = j.at("t_error_m").get<double>();
  if (!j.at("r_error_deg").is_null()) {
    report.r_error_deg = j.at("r_error_deg").get<double>();
  }
  report.trans_cost_history = j.at("trans_cost_history").get<std::vector<double>>();
  report.rot_cost_history = j.at("rot_cost_history").get<std::vector<double>>();
  if (j.contains("timings_ms")) {
    const auto& t = j.at("timings_ms");
    report.timings.prep_ms = t.at("prep").get<double>();
    report.timings.search_ms = t.at("search").get<double>();
    report.timings.refine_ms = t.at("refine").get<double>();
    report.timings.total_ms = t.at("total").get<double>();
  }
  return report;
}

void write_localization_report(const std::string& path, const LocalizationReport& report) {
  write_text_file(path, localization_report_to_json(report));
}

std::string evaluation_report_to_json(const EvaluationReport& report,
                                      const PipelineConfig& cfg) {
  JsonWriter w;
  w.begin_object();
  w.key("format_version");
  w.value(1L);
  w.key("config");
  w.begin_object();
  w.key("grid_level");
  w.value(long(cfg.grid_level));
  w.key("num_translations");
  w.value(long(cfg.num_translations));
  w.key("top_k");
  w.value(long(cfg.top_k));
  w.key("tau");
  w.value(cfg.tau);
  w.key("gamma");
  w.value(cfg.gamma);
  w.end_object();
  w.key("scenes");
  w.begin_array();
  for (const auto& [name, rep] : report.per_scene) {
    w.begin_object();
    w.key("name");
    w.value(name);
    w.key("report");
    write_report_body(w, rep, false);  // timings live in the trailing section
    w.end_object();
  }
  w.end_array();
  w.key("metrics");
  w.begin_object();
  w.key("scene_count");
  w.value(long(report.metrics.scene_count));
  w.key("failures");
  w.value(long(report.metrics.failures));
  w.key("recall_0.1m_5deg");
  w.value(report.metrics.recall_01m_5deg);
  w.key("recall_0.2m_10deg");
  w.value(report.metrics.recall_02m_10deg);
  w.key("recall_0.3m_15deg");
  w.value(report.metrics.recall_03m_15deg);
  w.key("median_t_error_m");
  if (report.metrics.median_t_error_m) {
    w.value(*report.metrics.median_t_error_m);
  } else {
    w.null_value();
  }
  w.key("median_r_error_deg");
  if (report.metrics.median_r_error_deg) {
    w.value(*report.metrics.median_r_error_deg);
  } else {
    w.null_value();
  }
  w.end_object();
  w.key("timings");
  w.begin_object();
  w.key("mean_prep_ms");
  w.value(report.mean_timings.prep_ms);
  w.key("mean_search_ms");
  w.value(report.mean_timings.search_ms);
  w.key("mean_refine_ms");
  w.value(report.mean_timings.refine_ms);
  w.key("mean_total_ms");
  w.value(report.mean_timings.total_ms);
  w.end_object();
  w.end_object();
  return w.str() + "\n";
}

void write_evaluation_report(const std::string& path, const EvaluationReport& report,
                             const PipelineConfig& cfg) {
  write_text_file(path, evaluation_report_to_json(report, cfg));
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace fgpl
