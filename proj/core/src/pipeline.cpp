#include "fgpl/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numeric>

#include "fgpl/parallel.hpp"

namespace fgpl {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void hash_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;  // FNV-1a
  }
}

void hash_double(std::uint64_t& h, double v) { hash_bytes(h, &v, sizeof(v)); }

}  // namespace

std::uint64_t compute_map_id(const std::vector<Segment3D>& raw_lines,
                             const PipelineConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& seg : raw_lines) {
    for (int i = 0; i < 3; ++i) hash_double(h, seg.start()(i));
    for (int i = 0; i < 3; ++i) hash_double(h, seg.end()(i));
  }
  hash_double(h, double(cfg.grid_level));
  hash_double(h, double(cfg.num_translations));
  hash_double(h, cfg.gamma);
  hash_double(h, cfg.theta_clus_deg);
  hash_double(h, cfg.delta_3d);
  hash_double(h, cfg.min_line_length_3d);
  return h;
}

namespace {

struct MapPrep {
  std::vector<Segment3D> lines;
  double kept_fraction;
  DirectionTriplet d3d;
  LineClusters3D clusters;
  IntersectionClusters3D intersections;
};

MapPrep prepare_map_features(const std::vector<Segment3D>& raw_lines,
                             const PipelineConfig& cfg) {
  if (raw_lines.empty()) throw EmptyInput("map preparation: no 3D lines");
  std::vector<Segment3D> kept;
  for (const auto& seg : raw_lines) {
    if (seg.length() >= cfg.min_line_length_3d) kept.push_back(seg);
  }
  const double r = double(kept.size()) / double(raw_lines.size());
  auto d3d = estimate_principal_directions_3d(kept, cfg.voting);
  auto clusters = cluster_lines_3d(kept, d3d, deg_to_rad(cfg.theta_clus_deg));
  auto intersections = extract_intersections_3d(clusters, cfg.delta_3d);
  return {std::move(kept), r, d3d, std::move(clusters), std::move(intersections)};
}

}  // namespace

MapContext build_map_context(const std::vector<Segment3D>& raw_lines,
                             const PipelineConfig& cfg) {
  MapPrep prep = prepare_map_features(raw_lines, cfg);
  const Aabb box = bounding_box(prep.lines);
  const auto pool = generate_translation_pool(box, cfg.num_translations);
  const auto grid = QueryGrid::icosphere(cfg.grid_level);
  const std::uint64_t id = compute_map_id(raw_lines, cfg);
  CanonicalMap canonical = canonicalize_map(prep.clusters, prep.intersections, prep.d3d,
                                            pool, grid, cfg.gamma, cfg.tau, id);
  return {std::move(prep.lines), prep.kept_fraction,    prep.d3d,
          std::move(prep.clusters), std::move(prep.intersections),
          std::move(canonical),  box,
          id};
}

MapContext build_map_context_with_cache(const std::vector<Segment3D>& raw_lines,
                                        const PipelineConfig& cfg, FieldCache cache) {
  const std::uint64_t id = compute_map_id(raw_lines, cfg);
  if (cache.map_id != id) {
    throw ConfigError("field cache does not match this map and config");
  }
  MapPrep prep = prepare_map_features(raw_lines, cfg);
  const Aabb box = bounding_box(prep.lines);
  const auto grid = QueryGrid::icosphere(cfg.grid_level);
  CanonicalMap canonical = assemble_canonical_map(prep.clusters, prep.intersections,
                                                  prep.d3d, grid, std::move(cache));
  return {std::move(prep.lines), prep.kept_fraction,    prep.d3d,
          std::move(prep.clusters), std::move(prep.intersections),
          std::move(canonical),  box,
          id};
}

QueryFeatures prepare_query(const std::vector<SphericalSegment>& lines2d,
                            double kept_fraction_3d, const PipelineConfig& cfg) {
  if (lines2d.empty()) throw EmptyInput("query preparation: no 2D lines");
  // keep the longest ⌈r·N⌉ segments, matching the 3D filter ratio
  const std::size_t keep = static_cast<std::size_t>(
      std::ceil(kept_fraction_3d * double(lines2d.size())));
  std::vector<std::size_t> order(lines2d.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lines2d[a].length() > lines2d[b].length();
  });
  order.resize(std::min(keep, order.size()));
  std::sort(order.begin(), order.end());
  std::vector<SphericalSegment> kept;
  kept.reserve(order.size());
  for (std::size_t i : order) kept.push_back(lines2d[i]);

  QueryFeatures q{
      .clusters = {}, .intersections = {},
      .directions = estimate_principal_directions_2d(kept, cfg.voting)};
  q.clusters = cluster_lines_2d(kept, q.directions, deg_to_rad(cfg.theta_clus_deg));
  q.intersections = extract_intersections_2d(q.clusters, cfg.delta_2d);
  return q;
}

QueryFeatures prepare_query(const std::vector<SphericalSegment>& lines2d,
                            const MapContext& map, const PipelineConfig& cfg) {
  if (lines2d.empty()) throw EmptyInput("query preparation: no 2D lines");
  const std::size_t keep = static_cast<std::size_t>(
      std::ceil(map.kept_fraction * double(lines2d.size())));
  std::vector<std::size_t> order(lines2d.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lines2d[a].length() > lines2d[b].length();
  });
  order.resize(std::min(keep, order.size()));
  std::sort(order.begin(), order.end());
  std::vector<SphericalSegment> kept;
  kept.reserve(order.size());
  for (std::size_t i : order) kept.push_back(lines2d[i]);

  DirectionTriplet d2d = estimate_principal_directions_2d(kept, cfg.voting);
  d2d = reconcile_directions_2d(d2d, map.d3d, kept, cfg.voting);

  QueryFeatures q{.clusters = {}, .intersections = {}, .directions = d2d};
  q.clusters = cluster_lines_2d(kept, q.directions, deg_to_rad(cfg.theta_clus_deg));
  q.intersections = extract_intersections_2d(q.clusters, cfg.delta_2d);
  return q;
}

LocalizationReport localize(const std::vector<SphericalSegment>& lines2d,
                            const MapContext& map, const PipelineConfig& cfg,
                            const Pose* gt_pose) {
  LocalizationReport report;
  const auto t_start = Clock::now();

  QueryFeatures query;
  try {
    query = prepare_query(lines2d, map, cfg);
  } catch (const Error& e) {
    report.failure_stage = "input_prep";
    report.error = e.what();
    report.timings.prep_ms = ms_since(t_start);
    report.timings.total_ms = report.timings.prep_ms;
    return report;
  }
  report.timings.prep_ms = ms_since(t_start);

  const auto t_search = Clock::now();
  std::vector<PoseCandidate> candidates;
  try {
    SearchParams params{cfg.top_k, cfg.tau, cfg.max_rotation_residual_deg};
    candidates = search_poses(query, map.canonical, params);
    if (candidates.empty()) throw EmptyPool("search returned no candidates");
  } catch (const Error& e) {
    report.failure_stage = "search";
    report.error = e.what();
    report.timings.search_ms = ms_since(t_search);
    report.timings.total_ms = ms_since(t_start);
    return report;
  }
  report.timings.search_ms = ms_since(t_search);

  const auto t_refine = Clock::now();
  try {
    const RefinementResult best =
        refine_best(candidates, query.intersections, map.intersections, query.clusters,
                    map.clusters, cfg.refine);
    report.success = true;
    report.pose = best.pose;
    report.search_cost = best.search_cost;
    report.match_count = best.match_count;
    report.trans_cost_history = best.trans_cost_history;
    report.rot_cost_history = best.rot_cost_history;
  } catch (const Error& e) {
    report.failure_stage = "refine";
    report.error = e.what();
    report.timings.refine_ms = ms_since(t_refine);
    report.timings.total_ms = ms_since(t_start);
    return report;
  }
  report.timings.refine_ms = ms_since(t_refine);
  report.timings.total_ms = ms_since(t_start);

  if (gt_pose != nullptr) {
    report.t_error_m = (report.pose.translation - gt_pose->translation).norm();
    report.r_error_deg = rotation_geodesic_error(report.pose.rotation, gt_pose->rotation);
  }
  return report;
}

namespace {

std::optional<double> median_of(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

EvaluationReport evaluate_scenes(const std::vector<SceneRecord>& scenes,
                                 const PipelineConfig& cfg) {
  if (scenes.empty()) throw EmptyInput("evaluate_scenes: no scenes");
  EvaluationReport report;
  report.per_scene.resize(scenes.size());

  parallel_for(scenes.size(), [&](std::size_t i) {
    const auto& rec = scenes[i];
    MapContext map = build_map_context(rec.scene.lines3d, cfg);
    report.per_scene[i] = {rec.name,
                           localize(rec.scene.lines2d, map, cfg, &rec.scene.gt_pose)};
  });

  auto& m = report.metrics;
  m.scene_count = int(scenes.size());
  std::vector<double> t_errors, r_errors;
  int hits[3] = {0, 0, 0};
  constexpr double kThresh[3][2] = {{0.1, 5.0}, {0.2, 10.0}, {0.3, 15.0}};
  for (const auto& [name, rep] : report.per_scene) {
    if (!rep.success) {
      ++m.failures;
      continue;
    }
    t_errors.push_back(*rep.t_error_m);
    r_errors.push_back(*rep.r_error_deg);
    for (int k = 0; k < 3; ++k) {
      if (*rep.t_error_m <= kThresh[k][0] && *rep.r_error_deg <= kThresh[k][1]) ++hits[k];
    }
    report.mean_timings.prep_ms += rep.timings.prep_ms;
    report.mean_timings.search_ms += rep.timings.search_ms;
    report.mean_timings.refine_ms += rep.timings.refine_ms;
    report.mean_timings.total_ms += rep.timings.total_ms;
  }
  const double n = double(scenes.size());
  m.recall_01m_5deg = hits[0] / n;
  m.recall_02m_10deg = hits[1] / n;
  m.recall_03m_15deg = hits[2] / n;
  m.median_t_error_m = median_of(t_errors);
  m.median_r_error_deg = median_of(r_errors);
  const int succ = m.scene_count - m.failures;
  if (succ > 0) {
    report.mean_timings.prep_ms /= succ;
    report.mean_timings.search_ms /= succ;
    report.mean_timings.refine_ms /= succ;
    report.mean_timings.total_ms /= succ;
  }
  return report;
}

}  // namespace fgpl
