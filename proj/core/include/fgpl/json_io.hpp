#pragma once

#include <string>
#include <vector>

#include "fgpl/pipeline.hpp"
#include "fgpl/scene.hpp"

namespace fgpl {

/// Minimal streaming JSON writer with fixed key order and doubles printed at
/// 17 significant digits, so emitted files are deterministic and round-trip
/// exactly.
class JsonWriter {
 public:
  void begin_object();
  void end_object();
  void begin_array();
  void end_array();
  void key(const std::string& name);
  void value(double v);
  void value(long v);
  void value(int v) { value(static_cast<long>(v)); }
  void value(unsigned long v);
  void value(bool v);
  void value(const std::string& v);
  void null_value();

  const std::string& str() const { return out_; }

 private:
  void pre_value();
  void newline_indent();

  std::string out_;
  std::vector<std::pair<char, int>> stack_;  // ('o'|'a', children)
  bool pending_key_ = false;
};

// --- file formats ---------------------------------------------------------

// Map: {"format_version":1, "lines":[[x1,y1,z1,x2,y2,z2], ...]} in meters.
std::vector<Segment3D> read_map_json(const std::string& path);
void write_map_json(const std::string& path, const std::vector<Segment3D>& lines);

// Query: {"format_version":1, "lines":[[sx,sy,sz,ex,ey,ez], ...]} with unit
// endpoint vectors.
std::vector<SphericalSegment> read_query_json(const std::string& path);
void write_query_json(const std::string& path, const std::vector<SphericalSegment>& lines);

// Scene: map + query + ground truth + noise + seed in one file.
SyntheticScene read_scene_json(const std::string& path);
void write_scene_json(const std::string& path, const SyntheticScene& scene);

std::string localization_report_to_json(const LocalizationReport& report);
LocalizationReport read_localization_report(const std::string& path);
void write_localization_report(const std::string& path, const LocalizationReport& report);

/// Evaluation report: all deterministic content first, wall-clock timings in
/// a trailing "timings" section (the deterministic part is bit-identical for
/// identical seeds and configs regardless of thread count).
std::string evaluation_report_to_json(const EvaluationReport& report,
                                      const PipelineConfig& cfg);
void write_evaluation_report(const std::string& path, const EvaluationReport& report,
                             const PipelineConfig& cfg);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace fgpl
