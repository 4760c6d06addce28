// fgpl: fully geometric panoramic localization against 3D line maps.
//
// Subcommands: gen-scene, build-map, localize, evaluate, bench.
// Exit codes: 0 success, 2 localization failure, 1 I/O or config error.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fgpl/json_io.hpp"
#include "fgpl/parallel.hpp"
#include "fgpl/pipeline.hpp"
#include "fgpl/rng.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void add_pipeline_flags(CLI::App* cmd, fgpl::PipelineConfig& cfg) {
  cmd->add_option("--grid-level", cfg.grid_level, "icosphere level of the query grid (0-4)");
  cmd->add_option("--num-trans", cfg.num_translations, "translation pool size per map");
  cmd->add_option("--top-k", cfg.top_k, "candidates passed to refinement");
  cmd->add_option("--tau", cfg.tau, "inlier threshold of the robust cost");
  cmd->add_option("--gamma", cfg.gamma, "sharpening exponent of point distance fields");
}

int run_gen_scene(const std::string& out, const std::string& map_out,
                  const std::string& query_out, std::uint64_t seed,
                  std::vector<double> room, int furniture, double sigma_deg,
                  double dropout, double clutter, int snap_pool, double offset) {
  fgpl::SceneSpec spec;
  spec.seed = seed;
  spec.room_size = fgpl::Vec3(room[0], room[1], room[2]);
  spec.furniture_count = furniture;
  spec.noise = {fgpl::deg_to_rad(sigma_deg), dropout, clutter};

  if (snap_pool > 0) {
    // Sample the pose near a translation-pool point: generate the 3D lines
    // first (same seed stream), pick a pool cell, then re-generate with the
    // pose fixed.
    fgpl::SceneSpec dry = spec;
    dry.noise = {};
    const fgpl::SyntheticScene lines_only = fgpl::generate_scene(dry);
    const auto pool =
        fgpl::generate_translation_pool(fgpl::bounding_box(lines_only.lines3d), snap_pool);
    fgpl::Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    for (int attempt = 0; attempt < 1000; ++attempt) {
      fgpl::Vec3 t = pool[rng.uniform_int(pool.size())];
      if (offset > 0.0) {
        t += std::cbrt(rng.uniform()) * offset * rng.unit_vec3();
      }
      if ((t.array() < 0.2).any() || (t.array() > spec.room_size.array() - 0.2).any()) {
        continue;
      }
      spec.fixed_pose =
          fgpl::Pose{fgpl::Rotation::from_matrix(rng.rotation_matrix()), t};
      break;
    }
    if (!spec.fixed_pose) {
      std::cerr << "gen-scene: could not place a pose near the pool\n";
      return 1;
    }
  }

  const fgpl::SyntheticScene scene = fgpl::generate_scene(spec);
  fgpl::write_scene_json(out, scene);
  if (!map_out.empty()) fgpl::write_map_json(map_out, scene.lines3d);
  if (!query_out.empty()) fgpl::write_query_json(query_out, scene.lines2d);
  std::cout << "scene: " << scene.lines3d.size() << " 3D lines, " << scene.lines2d.size()
            << " 2D lines -> " << out << "\n";
  return 0;
}

int run_build_map(const std::string& map_path, const std::string& out,
                  const fgpl::PipelineConfig& cfg) {
  const auto lines = fgpl::read_map_json(map_path);
  const fgpl::MapContext map = fgpl::build_map_context(lines, cfg);
  fgpl::save_field_cache(map.canonical.cache, out);
  std::cout << "cache: " << map.canonical.cache.entries.size() << " translations, |Q|="
            << map.canonical.cache.grid_points << " -> " << out << "\n";
  return 0;
}

int run_localize(const std::string& map_path, const std::string& cache_path,
                 const std::string& query_path, const std::string& out,
                 const fgpl::PipelineConfig& cfg) {
  const auto lines3d = fgpl::read_map_json(map_path);
  const auto lines2d = fgpl::read_query_json(query_path);
  fgpl::MapContext map =
      cache_path.empty()
          ? fgpl::build_map_context(lines3d, cfg)
          : fgpl::build_map_context_with_cache(lines3d, cfg,
                                               fgpl::load_field_cache(cache_path));
  const fgpl::LocalizationReport report = fgpl::localize(lines2d, map, cfg);
  if (!out.empty()) fgpl::write_localization_report(out, report);
  if (!report.success) {
    std::cerr << "localization failed at " << report.failure_stage << ": " << report.error
              << "\n";
    return 2;
  }
  std::cout << "pose t = [" << report.pose.translation.transpose() << "], search cost "
            << report.search_cost << ", " << report.match_count << " matches\n";
  return 0;
}

int run_evaluate(const std::string& scenes_dir, const std::string& out,
                 const fgpl::PipelineConfig& cfg) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(scenes_dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::cerr << "evaluate: no .json scenes in " << scenes_dir << "\n";
    return 1;
  }
  std::vector<fgpl::SceneRecord> scenes;
  scenes.reserve(files.size());
  for (const auto& f : files) {
    scenes.push_back({fs::path(f).stem().string(), fgpl::read_scene_json(f)});
  }
  const fgpl::EvaluationReport report = fgpl::evaluate_scenes(scenes, cfg);
  if (!out.empty()) fgpl::write_evaluation_report(out, report, cfg);
  std::cout << "scenes " << report.metrics.scene_count << ", failures "
            << report.metrics.failures << ", recall@(0.1m,5deg) "
            << report.metrics.recall_01m_5deg << "\n";
  return 0;
}

int run_bench(std::uint64_t seed, int exhaustive_subset, const std::string& out,
              fgpl::PipelineConfig cfg) {
  fgpl::SceneSpec spec;
  spec.seed = seed;
  const fgpl::SyntheticScene scene = fgpl::generate_scene(spec);

  const auto t_build = Clock::now();
  const fgpl::MapContext map = fgpl::build_map_context(scene.lines3d, cfg);
  const double build_ms = ms_since(t_build);

  const fgpl::QueryFeatures query =
      fgpl::prepare_query(scene.lines2d, map.kept_fraction, cfg);

  // the full 48-rotation pool: sign/permutation filter disabled
  fgpl::SearchParams params{cfg.top_k, cfg.tau, 181.0};

  const auto t_cached = Clock::now();
  const auto cached = fgpl::search_poses(query, map.canonical, params);
  const double cached_ms = ms_since(t_cached);

  const std::size_t n_trans = map.canonical.translations.size();
  const std::size_t n_rot = 48;
  std::size_t exh_trans = n_trans;
  fgpl::CanonicalMap subset = map.canonical;
  if (exhaustive_subset > 0 && std::size_t(exhaustive_subset) < n_trans) {
    exh_trans = std::size_t(exhaustive_subset);
    subset.translations.resize(exh_trans);
    subset.cache.entries.resize(exh_trans);
  }
  const auto t_exh = Clock::now();
  const auto exhaustive = fgpl::exhaustive_search_poses(query, subset, params);
  const double exh_ms = ms_since(t_exh);
  const double exh_full_ms = exh_ms * double(n_trans) / double(exh_trans);

  fgpl::JsonWriter w;
  w.begin_object();
  w.key("translations");
  w.value(long(n_trans));
  w.key("rotations");
  w.value(long(n_rot));
  w.key("poses_scored");
  w.value(long(n_trans * n_rot));
  w.key("cache_build_ms");
  w.value(build_ms);
  w.key("cached_search_ms");
  w.value(cached_ms);
  w.key("exhaustive_translations_timed");
  w.value(long(exh_trans));
  w.key("exhaustive_ms");
  w.value(exh_ms);
  w.key("exhaustive_full_pool_ms");
  w.value(exh_full_ms);
  w.key("speedup");
  w.value(exh_full_ms / cached_ms);
  w.key("cached_top1_translation");
  w.value(long(cached.empty() ? -1 : cached.front().translation_index));
  w.key("exhaustive_top1_translation");
  w.value(long(exhaustive.empty() ? -1 : exhaustive.front().translation_index));
  w.end_object();
  const std::string text = w.str() + "\n";
  if (!out.empty()) fgpl::write_text_file(out, text);
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fully geometric panoramic localization from 2D/3D line maps"};
  app.require_subcommand(1);

  fgpl::PipelineConfig cfg;

  // gen-scene
  auto* gen = app.add_subcommand("gen-scene", "generate a synthetic Manhattan scene");
  std::string gen_out = "scene.json", gen_map_out, gen_query_out;
  std::uint64_t gen_seed = 0;
  std::vector<double> gen_room = {6.0, 5.0, 3.0};
  int gen_furniture = 3;
  double gen_sigma_deg = 0.0, gen_dropout = 0.0, gen_clutter = 0.0, gen_offset = 0.0;
  int gen_snap_pool = 0;
  gen->add_option("--out", gen_out, "scene JSON output")->required();
  gen->add_option("--map-out", gen_map_out, "also write the 3D lines as a map JSON");
  gen->add_option("--query-out", gen_query_out, "also write the 2D lines as a query JSON");
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--room", gen_room, "room size W D H")->expected(3);
  gen->add_option("--furniture", gen_furniture, "number of furniture boxes");
  gen->add_option("--noise-sigma-deg", gen_sigma_deg, "endpoint jitter sigma (degrees)");
  gen->add_option("--dropout", gen_dropout, "2D line dropout fraction");
  gen->add_option("--clutter", gen_clutter, "2D clutter fraction");
  gen->add_option("--snap-pool", gen_snap_pool,
                  "sample the pose near a pool point of this pool size");
  gen->add_option("--offset", gen_offset, "max offset from the pool point (m)");

  // build-map
  auto* build = app.add_subcommand("build-map", "precompute the field cache for a map");
  std::string build_map_path, build_out = "cache.fgpl";
  build->add_option("--map", build_map_path, "map JSON")->required();
  build->add_option("--out", build_out, "cache output path")->required();
  add_pipeline_flags(build, cfg);

  // localize
  auto* loc = app.add_subcommand("localize", "localize a 2D line query against a map");
  std::string loc_map, loc_cache, loc_query, loc_out;
  loc->add_option("--map", loc_map, "map JSON")->required();
  loc->add_option("--cache", loc_cache, "field cache built by build-map");
  loc->add_option("--query", loc_query, "query JSON (2D lines)")->required();
  loc->add_option("--out", loc_out, "report JSON output");
  add_pipeline_flags(loc, cfg);

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "batch-localize generated scenes");
  std::string eval_dir, eval_out;
  eval->add_option("--scenes-dir", eval_dir, "directory of scene JSONs")->required();
  eval->add_option("--out", eval_out, "evaluation report output");
  add_pipeline_flags(eval, cfg);

  // bench
  auto* bench = app.add_subcommand("bench", "cached vs exhaustive search timing");
  std::uint64_t bench_seed = 7;
  int bench_subset = 0;
  std::string bench_out;
  bench->add_option("--seed", bench_seed, "scene seed");
  bench->add_option("--exhaustive-subset", bench_subset,
                    "time the exhaustive path on this many translations (0 = all)");
  bench->add_option("--out", bench_out, "bench report output");
  add_pipeline_flags(bench, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      return run_gen_scene(gen_out, gen_map_out, gen_query_out, gen_seed, gen_room,
                           gen_furniture, gen_sigma_deg, gen_dropout, gen_clutter,
                           gen_snap_pool, gen_offset);
    }
    if (build->parsed()) return run_build_map(build_map_path, build_out, cfg);
    if (loc->parsed()) return run_localize(loc_map, loc_cache, loc_query, loc_out, cfg);
    if (eval->parsed()) return run_evaluate(eval_dir, eval_out, cfg);
    if (bench->parsed()) return run_bench(bench_seed, bench_subset, bench_out, cfg);
  } catch (const fgpl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
