#include <benchmark/benchmark.h>

#include "fgpl/distance_field.hpp"
#include "fgpl/pipeline.hpp"
#include "fgpl/rng.hpp"
#include "fgpl/scene.hpp"

using namespace fgpl;

namespace {

const QueryGrid& grid3() {
  static const QueryGrid g = QueryGrid::icosphere(3);
  return g;
}

SyntheticScene bench_scene() {
  SceneSpec spec;
  spec.seed = 99;
  return generate_scene(spec);
}

}  // namespace

static void BM_SegmentDistance(benchmark::State& state) {
  Rng rng(1);
  const SphericalSegment seg(UnitVector::normalized(Vec3(1, 0.1, 0)),
                             UnitVector::normalized(Vec3(0.2, 1, 0.3)));
  const UnitVector x = UnitVector::normalized(rng.unit_vec3());
  for (auto _ : state) {
    benchmark::DoNotOptimize(segment_distance(x, seg));
  }
}
BENCHMARK(BM_SegmentDistance);

static void BM_LineField2D(benchmark::State& state) {
  const SyntheticScene scene = bench_scene();
  for (auto _ : state) {
    benchmark::DoNotOptimize(line_field_2d(scene.lines2d, grid3()));
  }
}
BENCHMARK(BM_LineField2D);

static void BM_RotationNNMap(benchmark::State& state) {
  Rng rng(2);
  const Rotation r = Rotation::from_matrix(rng.rotation_matrix());
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_rotation_nn_map(r, grid3()));
  }
}
BENCHMARK(BM_RotationNNMap);

static void BM_FieldCost(benchmark::State& state) {
  const SyntheticScene scene = bench_scene();
  const DistanceField f = line_field_2d(scene.lines2d, grid3());
  for (auto _ : state) {
    benchmark::DoNotOptimize(field_cost(f, f, 0.1));
  }
}
BENCHMARK(BM_FieldCost);

static void BM_CachedSearch(benchmark::State& state) {
  const SyntheticScene scene = bench_scene();
  PipelineConfig cfg;
  cfg.num_translations = int(state.range(0));
  const MapContext map = build_map_context(scene.lines3d, cfg);
  const QueryFeatures query = prepare_query(scene.lines2d, map.kept_fraction, cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(search_poses(query, map.canonical, {}));
  }
  state.SetItemsProcessed(state.iterations() * cfg.num_translations);
}
BENCHMARK(BM_CachedSearch)->Arg(64)->Arg(500)->Unit(benchmark::kMillisecond);

static void BM_CacheBuild(benchmark::State& state) {
  const SyntheticScene scene = bench_scene();
  PipelineConfig cfg;
  cfg.num_translations = int(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_map_context(scene.lines3d, cfg));
  }
}
BENCHMARK(BM_CacheBuild)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
