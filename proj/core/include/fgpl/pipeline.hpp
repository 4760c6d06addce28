#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fgpl/field_cache.hpp"
#include "fgpl/pose_search.hpp"
#include "fgpl/refinement.hpp"
#include "fgpl/scene.hpp"

namespace fgpl {

struct PipelineConfig {
  int grid_level = 3;
  int num_translations = 500;
  int top_k = 5;
  double tau = 0.1;
  double gamma = 0.2;
  double theta_clus_deg = 10.0;
  double delta_2d = 0.1;   // rad
  double delta_3d = 0.15;  // m
  double min_line_length_3d = 0.2;  // m
  double max_rotation_residual_deg = 5.0;
  RefineOptions refine;
  VotingParams voting;
};

/// Prepared 3D map: filtered lines, principal directions, clusters and
/// intersections in the original frame, plus the canonicalized map with its
/// translation-pool field cache.
struct MapContext {
  std::vector<Segment3D> lines;  // after the length filter
  double kept_fraction = 1.0;    // r of the 3D length filter
  DirectionTriplet d3d;
  LineClusters3D clusters;
  IntersectionClusters3D intersections;
  CanonicalMap canonical;
  Aabb box;
  std::uint64_t map_id = 0;
};

std::uint64_t compute_map_id(const std::vector<Segment3D>& raw_lines,
                             const PipelineConfig& cfg);

/// Full map preparation including cache building.
MapContext build_map_context(const std::vector<Segment3D>& raw_lines,
                             const PipelineConfig& cfg);

/// Map preparation adopting a cache loaded from disk. The cache must have
/// been built from the same raw lines and config (verified via map_id).
MapContext build_map_context_with_cache(const std::vector<Segment3D>& raw_lines,
                                        const PipelineConfig& cfg, FieldCache cache);

/// 2D input preparation: length-ratio filter, principal directions,
/// clustering, intersections.
QueryFeatures prepare_query(const std::vector<SphericalSegment>& lines2d,
                            double kept_fraction_3d, const PipelineConfig& cfg);

/// prepare_query plus the 2D/3D direction-pattern reconciliation against the
/// map's principal directions.
QueryFeatures prepare_query(const std::vector<SphericalSegment>& lines2d,
                            const MapContext& map, const PipelineConfig& cfg);

struct StageTimings {
  double prep_ms = 0.0;
  double search_ms = 0.0;
  double refine_ms = 0.0;
  double total_ms = 0.0;
};

struct LocalizationReport {
  bool success = false;
  std::string failure_stage;  // "input_prep" | "search" | "refine" when failed
  std::string error;
  Pose pose;
  long search_cost = 0;
  int match_count = 0;
  std::vector<double> trans_cost_history;
  std::vector<double> rot_cost_history;
  std::optional<double> t_error_m;
  std::optional<double> r_error_deg;
  StageTimings timings;
};

/// input_prep → search → refine, with per-stage wall-clock timings. Errors
/// from the stages become a failure report tagged with the stage.
LocalizationReport localize(const std::vector<SphericalSegment>& lines2d,
                            const MapContext& map, const PipelineConfig& cfg,
                            const Pose* gt_pose = nullptr);

struct SceneRecord {
  std::string name;
  SyntheticScene scene;
};

struct EvaluationMetrics {
  int scene_count = 0;
  int failures = 0;
  double recall_01m_5deg = 0.0;
  double recall_02m_10deg = 0.0;
  double recall_03m_15deg = 0.0;
  std::optional<double> median_t_error_m;
  std::optional<double> median_r_error_deg;
};

struct EvaluationReport {
  std::vector<std::pair<std::string, LocalizationReport>> per_scene;
  EvaluationMetrics metrics;
  StageTimings mean_timings;
};

/// Localizes every scene against a map built from its own 3D lines and
/// aggregates recall at (0.1 m, 5°), (0.2 m, 10°), (0.3 m, 15°) plus median
/// errors and mean stage timings. Parallelizes over scenes.
EvaluationReport evaluate_scenes(const std::vector<SceneRecord>& scenes,
                                 const PipelineConfig& cfg);

}  // namespace fgpl
