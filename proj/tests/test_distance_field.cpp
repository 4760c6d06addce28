#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fgpl/distance_field.hpp"
#include "fgpl/rng.hpp"
#include "fgpl/scene.hpp"
#include "oracles.hpp"

using namespace fgpl;

namespace {

const QueryGrid& grid3() {
  static const QueryGrid g = QueryGrid::icosphere(3);
  return g;
}

std::vector<UnitVector> random_points(Rng& rng, int n) {
  std::vector<UnitVector> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) pts.push_back(oracle::random_unit(rng));
  return pts;
}

DistanceField exact_point_field(const std::vector<UnitVector>& pts, const QueryGrid& grid,
                                double gamma) {
  DistanceField f{FieldKind::point, 0, {}};
  f.values.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double best = M_PI;
    for (const auto& p : pts) {
      best = std::min(best, std::acos(clamp_unit(grid.point(k).dot(p.vec()))));
    }
    f.values[k] = float(std::pow(best, gamma));
  }
  return f;
}

}  // namespace

TEST_SUITE_BEGIN("distance_field");

TEST_CASE("line_field_2d: full great circle stays below pi/2") {
  // equator approximated by four arcs
  std::vector<SphericalSegment> arcs;
  const auto at = [](double phi) {
    return UnitVector::normalized(Vec3(std::cos(phi), std::sin(phi), 0.0));
  };
  for (int i = 0; i < 4; ++i) {
    arcs.emplace_back(at(i * M_PI / 2), at((i + 1) * M_PI / 2));
  }
  const DistanceField f = line_field_2d(arcs, grid3());
  for (std::size_t k = 0; k < grid3().size(); ++k) {
    CHECK(f.values[k] <= float(M_PI / 2) + 1e-6f);
    const double expected = std::abs(std::asin(clamp_unit(grid3().point(k).z())));
    CHECK(f.values[k] == doctest::Approx(expected).epsilon(1e-5));
  }
}

TEST_CASE("line_field_2d: single short arc hits 0 at its midpoint, pi/2 at pole") {
  const SphericalSegment arc(UnitVector::normalized(Vec3(1, -0.2, 0)),
                             UnitVector::normalized(Vec3(1, 0.2, 0)));
  const UnitVector mid = UnitVector::normalized(Vec3(1, 0, 0));
  CHECK(eval_line_distance(mid, {arc}) == doctest::Approx(0.0));
  CHECK(eval_line_distance(UnitVector(Vec3::UnitZ()), {arc}) == doctest::Approx(M_PI / 2));
}

TEST_CASE("line_field_2d equals the per-point oracle on random clusters") {
  Rng rng(50);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<SphericalSegment> arcs;
    const int n = 3 + int(rng.uniform_int(8));
    for (int i = 0; i < n; ++i) arcs.push_back(oracle::random_arc(rng));
    const DistanceField f = line_field_2d(arcs, grid3());
    for (std::size_t k = 0; k < grid3().size(); k += 17) {
      double want = M_PI;
      for (const auto& a : arcs) {
        want = std::min(want, segment_distance(UnitVector(grid3().point(k)), a));
      }
      CHECK(f.values[k] == doctest::Approx(want).epsilon(1e-6));
    }
  }
}

TEST_CASE("line_field_2d rejects empty input") {
  CHECK_THROWS_AS(line_field_2d({}, grid3()), EmptyInput);
}

TEST_CASE("point_field_2d basics") {
  SUBCASE("zero at a grid vertex") {
    const std::vector<UnitVector> pts{UnitVector(grid3().point(100))};
    const DistanceField f = point_field_2d(pts, grid3(), 0.2);
    CHECK(f.values[100] == doctest::Approx(0.0));
  }
  SUBCASE("gamma = 1 gives the plain distance field") {
    Rng rng(51);
    const auto pts = random_points(rng, 5);
    const DistanceField f = point_field_2d(pts, grid3(), 1.0);
    for (std::size_t k = 0; k < grid3().size(); k += 29) {
      double want = M_PI;
      for (const auto& p : pts) {
        want = std::min(want, spherical_distance(UnitVector(grid3().point(k)), p));
      }
      CHECK(f.values[k] == doctest::Approx(want).epsilon(1e-6));
    }
  }
  SUBCASE("sharpening arithmetic") {
    CHECK(std::pow(0.5, 0.2) == doctest::Approx(0.87055056329).epsilon(1e-9));
    CHECK(eval_point_distance(UnitVector(Vec3::UnitX()),
                              {UnitVector::normalized(
                                  Vec3(std::cos(0.5), std::sin(0.5), 0.0))},
                              0.2) == doctest::Approx(std::pow(0.5, 0.2)));
  }
  SUBCASE("gamma out of range") {
    Rng rng(1);
    CHECK_THROWS_AS(point_field_2d(random_points(rng, 1), grid3(), 0.0), ConfigError);
  }
}

TEST_CASE("line_field_3d matches project-then-2D composition") {
  Rng rng(52);
  const auto lines = box_wireframe(Vec3::Zero(), Vec3(4, 3, 2));
  const Vec3 t(2.0, 1.5, 1.0);
  const DistanceField f3 = line_field_3d(lines, t, grid3());
  std::vector<SphericalSegment> projected;
  for (const auto& seg : lines) {
    projected.push_back(project_segment(seg, Pose{Rotation::identity(), t}));
  }
  const DistanceField f2 = line_field_2d(projected, grid3());
  REQUIRE(f3.values.size() == f2.values.size());
  for (std::size_t k = 0; k < f3.values.size(); ++k) {
    CHECK(f3.values[k] == f2.values[k]);
  }
}

TEST_CASE("line_field_3d: box symmetry leaves the value multiset invariant") {
  const auto lines = box_wireframe(Vec3(-2, -1.5, -1), Vec3(2, 1.5, 1));
  const Vec3 center = Vec3::Zero();
  const DistanceField f = line_field_3d(lines, center, grid3());
  // 180-degree rotation about z is a symmetry of the box seen from the center
  const RotationNNMap nn =
      build_rotation_nn_map(Rotation::from_axis_angle(Vec3(0, 0, M_PI)), grid3());
  const DistanceField g = rotate_field(f, nn);
  std::vector<float> a = f.values, b = g.values;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double mean_dev = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) mean_dev += std::abs(a[k] - b[k]);
  mean_dev /= double(a.size());
  CHECK(mean_dev < grid3().delta());
}

TEST_CASE("single segment directly above the camera") {
  const std::vector<Segment3D> lines{Segment3D(Vec3(-0.5, 0, 2), Vec3(0.5, 0, 2))};
  const DistanceField f = line_field_3d(lines, Vec3::Zero(), grid3());
  const int top = grid3().nearest(Vec3::UnitZ());
  CHECK(f.values[top] < float(grid3().delta()));
}

TEST_CASE("point_field_3d basics") {
  SUBCASE("single point overhead") {
    const std::vector<Vec3> pts{Vec3(0, 0, 1)};
    const DistanceField f = point_field_3d(pts, Vec3::Zero(), grid3(), 0.2);
    const int near = grid3().nearest(Vec3::UnitZ());
    const double expected =
        std::pow(std::acos(clamp_unit(grid3().point(near).dot(Vec3::UnitZ()))), 0.2);
    CHECK(f.values[near] == doctest::Approx(expected).epsilon(1e-5));
  }
  SUBCASE("all points degenerate") {
    const std::vector<Vec3> pts{Vec3(0, 0, 1)};
    CHECK_THROWS_AS(point_field_3d(pts, Vec3(0, 0, 1), grid3(), 0.2), EmptyInput);
  }
  SUBCASE("random cluster equals the direct oracle") {
    Rng rng(53);
    std::vector<Vec3> pts;
    for (int i = 0; i < 12; ++i) pts.push_back(Vec3(2, 2, 1) + rng.gaussian_vec3());
    const Vec3 t(2, 2, 1.2);
    const DistanceField f = point_field_3d(pts, t, grid3(), 0.2);
    for (std::size_t k = 0; k < grid3().size(); k += 41) {
      double best = M_PI;
      for (const auto& p : pts) {
        best = std::min(best,
                        std::acos(clamp_unit(grid3().point(k).dot((p - t).normalized()))));
      }
      CHECK(f.values[k] == doctest::Approx(std::pow(best, 0.2)).epsilon(1e-5));
    }
  }
}

TEST_CASE("rotation nn map: identity is the identity permutation") {
  const RotationNNMap nn = build_rotation_nn_map(Rotation::identity(), grid3());
  for (std::size_t k = 0; k < grid3().size(); ++k) {
    CHECK(nn.indices[k] == std::int32_t(k));
  }
  CHECK(nn.max_mapped_distance == doctest::Approx(0.0));
}

TEST_CASE("rotation nn map: an icosahedral symmetry is a bijection") {
  // 180-degree rotations about coordinate axes are symmetries of the icosphere
  const RotationNNMap nn =
      build_rotation_nn_map(Rotation::from_axis_angle(Vec3(0, 0, M_PI)), grid3());
  std::vector<int> seen(grid3().size(), 0);
  for (auto idx : nn.indices) seen[idx]++;
  CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
  // acos near 1 resolves to ~1e-8 even for exact symmetry
  CHECK(nn.max_mapped_distance < 1e-6);
}

TEST_CASE("rotation nn map: mapped distances stay within delta") {
  Rng rng(54);
  for (int i = 0; i < 20; ++i) {
    const Rotation r = oracle::random_rotation(rng);
    const RotationNNMap nn = build_rotation_nn_map(r, grid3());
    for (std::size_t k = 0; k < grid3().size(); ++k) {
      const double d = std::acos(
          clamp_unit(grid3().point(nn.indices[k]).dot(r * grid3().point(k))));
      CHECK(d <= grid3().delta() + 1e-12);
    }
  }
}

TEST_CASE("rotate_field: identity map keeps the field") {
  Rng rng(55);
  const DistanceField f = exact_point_field(random_points(rng, 20), grid3(), 0.2);
  const RotationNNMap nn = build_rotation_nn_map(Rotation::identity(), grid3());
  const DistanceField g = rotate_field(f, nn);
  CHECK(g.values == f.values);
}

TEST_CASE("rotate_field approximates the exactly recomputed rotated field") {
  // interpolated field of Rᵀ·S vs its exact recomputation: mean error <= delta
  Rng rng(56);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<SphericalSegment> arcs;
    for (int i = 0; i < 6; ++i) arcs.push_back(oracle::random_arc(rng));
    const Rotation r = oracle::random_rotation(rng);
    const DistanceField f = line_field_2d(arcs, grid3());
    const DistanceField approx = rotate_field(f, build_rotation_nn_map(r, grid3()));

    std::vector<SphericalSegment> rotated;  // Rᵀ · arcs
    const Rotation rt = r.inverse();
    for (const auto& a : arcs) rotated.emplace_back(rt * a.start(), rt * a.end());
    const DistanceField exact = line_field_2d(rotated, grid3());

    double mean = 0.0;
    for (std::size_t k = 0; k < exact.values.size(); ++k) {
      mean += std::abs(double(approx.values[k]) - double(exact.values[k]));
    }
    mean /= double(exact.values.size());
    CHECK(mean <= grid3().delta());
  }
}

TEST_CASE("rotate_field there-and-back stays within twice the density") {
  Rng rng(57);
  std::vector<SphericalSegment> arcs;
  for (int i = 0; i < 6; ++i) arcs.push_back(oracle::random_arc(rng));
  const DistanceField f = line_field_2d(arcs, grid3());
  const Rotation r = oracle::random_rotation(rng);
  const DistanceField fwd = rotate_field(f, build_rotation_nn_map(r, grid3()));
  const DistanceField back = rotate_field(fwd, build_rotation_nn_map(r.inverse(), grid3()));
  double mean = 0.0;
  for (std::size_t k = 0; k < f.values.size(); ++k) {
    mean += std::abs(double(back.values[k]) - double(f.values[k]));
  }
  mean /= double(f.values.size());
  CHECK(mean <= 2.0 * grid3().delta());
}

TEST_CASE("field sums are nearly invariant under rotation") {
  Rng rng(58);
  const auto pts = random_points(rng, 40);
  const Rotation r = oracle::random_rotation(rng);
  std::vector<UnitVector> rotated;
  for (const auto& p : pts) rotated.push_back(r * p);
  const DistanceField f_s = exact_point_field(pts, grid3(), 1.0);
  const DistanceField f_rs = exact_point_field(rotated, grid3(), 1.0);
  const RotationNNMap nn = build_rotation_nn_map(r, grid3());
  const DistanceField composed = rotate_field(f_rs, nn);
  const double mean_s =
      std::accumulate(f_s.values.begin(), f_s.values.end(), 0.0) / double(f_s.values.size());
  const double mean_c = std::accumulate(composed.values.begin(), composed.values.end(), 0.0) /
                        double(composed.values.size());
  CHECK(std::abs(mean_s - mean_c) <= grid3().delta());
}

TEST_CASE("field_cost") {
  Rng rng(59);
  const DistanceField a = exact_point_field(random_points(rng, 10), grid3(), 0.2);
  SUBCASE("identical fields count every point as inlier") {
    CHECK(field_cost(a, a, 0.1) == -long(grid3().size()));
  }
  SUBCASE("a difference of exactly tau is not an inlier") {
    // constants chosen so the float difference is exactly tau
    DistanceField lo{FieldKind::point, 0, std::vector<float>(grid3().size(), 0.0f)};
    DistanceField hi{FieldKind::point, 0, std::vector<float>(grid3().size(), 0.1f)};
    CHECK(field_cost(lo, hi, double(0.1f)) == 0);
    CHECK(field_cost(lo, hi, std::nextafter(0.1f, 1.0f)) == -long(grid3().size()));
  }
  SUBCASE("random fields match an explicit recount") {
    const DistanceField b = exact_point_field(random_points(rng, 10), grid3(), 0.2);
    long count = 0;
    for (std::size_t k = 0; k < a.values.size(); ++k) {
      if (std::fabs(a.values[k] - b.values[k]) < 0.1f) ++count;
    }
    CHECK(field_cost(a, b, 0.1) == -count);
  }
  SUBCASE("mismatched kinds and grids are rejected") {
    DistanceField line{FieldKind::line, 0, std::vector<float>(grid3().size(), 0.0f)};
    CHECK_THROWS_AS(field_cost(a, line, 0.1), GridMismatch);
    DistanceField small{FieldKind::point, 0, std::vector<float>(12, 0.0f)};
    CHECK_THROWS_AS(field_cost(a, small, 0.1), GridMismatch);
  }
  SUBCASE("cost is invariant under a bijective permutation of both fields") {
    const DistanceField b = exact_point_field(random_points(rng, 10), grid3(), 0.2);
    const RotationNNMap nn =
        build_rotation_nn_map(Rotation::from_axis_angle(Vec3(M_PI, 0, 0)), grid3());
    const long base = field_cost(a, b, 0.1);
    CHECK(field_cost(rotate_field(a, nn), rotate_field(b, nn), 0.1) == base);
  }
}

TEST_CASE("line fields are 1-Lipschitz; point fields obey the snowflake bound") {
  Rng rng(60);
  std::vector<SphericalSegment> arcs;
  for (int i = 0; i < 8; ++i) arcs.push_back(oracle::random_arc(rng));
  const auto pts = random_points(rng, 30);
  for (int i = 0; i < 2000; ++i) {
    const UnitVector p1(grid3().point(rng.uniform_int(grid3().size())));
    const UnitVector p2(grid3().point(rng.uniform_int(grid3().size())));
    const double d = spherical_distance(p1, p2);
    const double lf = std::abs(eval_line_distance(p1, arcs) - eval_line_distance(p2, arcs));
    CHECK(lf <= d + 1e-7);
    const double pf =
        std::abs(eval_point_distance(p1, pts, 0.2) - eval_point_distance(p2, pts, 0.2));
    CHECK(pf <= std::pow(d, 0.2) + 1e-7);
  }
}

TEST_CASE("cached cost term deviates from the exhaustive term by at most 2 delta") {
  Rng rng(61);
  for (int trial = 0; trial < 10; ++trial) {
    SceneSpec spec;
    spec.seed = 700 + trial;
    spec.furniture_count = 1;
    const SyntheticScene scene = generate_scene(spec);
    const Rotation r = oracle::random_rotation(rng);
    const Vec3 t = scene.gt_pose.translation + 0.3 * rng.unit_vec3();

    std::vector<SphericalSegment> proj_i;  // identity-projected map lines
    std::vector<SphericalSegment> proj_r;  // projected at rotation R
    for (const auto& seg : scene.lines3d) {
      try {
        proj_i.push_back(project_segment(seg, Pose{Rotation::identity(), t}));
        proj_r.push_back(project_segment(seg, Pose{r, t}));
      } catch (const Error&) {
      }
    }
    const DistanceField f2 = line_field_2d(scene.lines2d, grid3());
    const DistanceField f3_exh = line_field_2d(proj_r, grid3());
    const DistanceField f3_cache = line_field_2d(proj_i, grid3());

    std::vector<SphericalSegment> rot2d;  // Rᵀ · 2D lines, evaluated exactly
    const Rotation rt = r.inverse();
    for (const auto& seg : scene.lines2d) {
      rot2d.emplace_back(rt * seg.start(), rt * seg.end());
    }
    const DistanceField f2_rot = line_field_2d(rot2d, grid3());

    double sum_exh = 0.0, sum_mod = 0.0;
    for (std::size_t k = 0; k < grid3().size(); ++k) {
      sum_exh += std::abs(double(f2.values[k]) - double(f3_exh.values[k]));
      sum_mod += std::abs(double(f2_rot.values[k]) - double(f3_cache.values[k]));
    }
    CHECK(std::abs(sum_exh - sum_mod) / double(grid3().size()) <= 2.0 * grid3().delta());
  }
}

TEST_SUITE_END();
