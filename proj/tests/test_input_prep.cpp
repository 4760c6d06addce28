#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fgpl/input_prep.hpp"
#include "fgpl/rng.hpp"
#include "fgpl/scene.hpp"
#include "oracles.hpp"

using namespace fgpl;

namespace {

const UnitVector ex{Vec3::UnitX()};
const UnitVector ey{Vec3::UnitY()};
const UnitVector ez{Vec3::UnitZ()};

/// Max over estimated axes of the angle to the closest expected axis (deg).
double triplet_axis_error_deg(const DirectionTriplet& got,
                              const std::array<Vec3, 3>& expected) {
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    double best = 180.0;
    for (const auto& e : expected) {
      best = std::min(best, axis_angle_deg(got[i], UnitVector::normalized(e)));
    }
    worst = std::max(worst, best);
  }
  return worst;
}

/// An arc on the great circle with the given unit normal.
SphericalSegment arc_with_normal(const Vec3& normal, double phi0, double len, Rng& rng) {
  const Vec3 u = rng.unit_tangent(normal);
  const Vec3 w = normal.cross(u);
  const Vec3 s = std::cos(phi0) * u + std::sin(phi0) * w;
  const Vec3 e = std::cos(phi0 + len) * u + std::sin(phi0 + len) * w;
  return {UnitVector::normalized(s), UnitVector::normalized(e)};
}

/// Arcs whose great circles pass through the axis d (i.e., lines "parallel to"
/// the vanishing direction d): normals are random directions orthogonal to d.
std::vector<SphericalSegment> arcs_through_axis(const Vec3& d, int count, Rng& rng) {
  std::vector<SphericalSegment> arcs;
  for (int i = 0; i < count; ++i) {
    const Vec3 n = rng.unit_tangent(d);
    // place the arc so it covers a region near d but not exactly at it
    const Vec3 u = d.normalized();
    const Vec3 w = n.cross(u);
    const double phi0 = rng.uniform(0.2, 0.7);
    const double len = rng.uniform(0.4, 1.2);
    const Vec3 s = std::cos(phi0) * u + std::sin(phi0) * w;
    const Vec3 e = std::cos(phi0 + len) * u + std::sin(phi0 + len) * w;
    arcs.emplace_back(UnitVector::normalized(s), UnitVector::normalized(e));
  }
  return arcs;
}

}  // namespace

TEST_SUITE_BEGIN("input_prep");

TEST_CASE("canonical_sign flips the dominant coordinate positive") {
  CHECK(canonical_sign(UnitVector(Vec3(0, 0, -1))).z() == doctest::Approx(1.0));
  CHECK(canonical_sign(UnitVector(Vec3(0, 0, 1))).z() == doctest::Approx(1.0));
  const UnitVector v = canonical_sign(UnitVector::normalized(Vec3(-0.9, 0.1, 0.2)));
  CHECK(v.x() > 0.0);
}

TEST_CASE("DirectionTriplet rejects near-parallel axes") {
  CHECK_THROWS_AS(DirectionTriplet(ex, UnitVector::normalized(Vec3(1.0, 0.1, 0.0)), ez),
                  DegenerateConfiguration);
}

TEST_CASE("pair_index_of covers the three unordered pairs") {
  CHECK(pair_index_of(0, 1) == 0);
  CHECK(pair_index_of(1, 0) == 0);
  CHECK(pair_index_of(1, 2) == 1);
  CHECK(pair_index_of(2, 0) == 2);
  CHECK(pair_index_of(0, 2) == 2);
}

TEST_CASE("2D principal directions from a clean rendered scene") {
  SceneSpec spec;
  spec.seed = 3;
  const SyntheticScene scene = generate_scene(spec);
  const DirectionTriplet got = estimate_principal_directions_2d(scene.lines2d);
  const Mat3 r = scene.gt_pose.rotation.matrix();
  CHECK(triplet_axis_error_deg(got, {r.col(0), r.col(1), r.col(2)}) < 0.5);
}

TEST_CASE("2D principal directions tolerate small angular noise") {
  SceneSpec spec;
  spec.seed = 3;
  spec.noise.sigma_rad = deg_to_rad(1.0);
  const SyntheticScene scene = generate_scene(spec);
  const DirectionTriplet got = estimate_principal_directions_2d(scene.lines2d);
  const Mat3 r = scene.gt_pose.rotation.matrix();
  CHECK(triplet_axis_error_deg(got, {r.col(0), r.col(1), r.col(2)}) < 2.0);
}

TEST_CASE("2D estimation fails without three vanishing directions") {
  Rng rng(9);
  SUBCASE("all lines share one vanishing direction") {
    const auto arcs = arcs_through_axis(Vec3::UnitZ(), 12, rng);
    CHECK_THROWS_AS(estimate_principal_directions_2d(arcs), InsufficientStructure);
  }
  SUBCASE("fewer than six lines") {
    const auto arcs = arcs_through_axis(Vec3::UnitZ(), 5, rng);
    CHECK_THROWS_AS(estimate_principal_directions_2d(arcs), InsufficientStructure);
  }
}

TEST_CASE("3D principal directions of a box wireframe are exact") {
  const auto lines = box_wireframe(Vec3::Zero(), Vec3(4, 3, 2));
  const DirectionTriplet got = estimate_principal_directions_3d(lines);
  CHECK(triplet_axis_error_deg(got, {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()}) <
        1e-6);
}

TEST_CASE("3D principal directions survive 20% clutter") {
  Rng rng(15);
  auto lines = box_wireframe(Vec3::Zero(), Vec3(4, 3, 2));
  for (int i = 0; i < 3; ++i) {  // ~20% of 15 lines
    const Vec3 a = Vec3(rng.uniform(0, 4), rng.uniform(0, 3), rng.uniform(0, 2));
    lines.emplace_back(a, a + 0.8 * rng.unit_vec3());
  }
  const DirectionTriplet got = estimate_principal_directions_3d(lines);
  CHECK(triplet_axis_error_deg(got, {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()}) < 2.0);
}

TEST_CASE("3D estimation rejects collinear input") {
  std::vector<Segment3D> lines;
  for (int i = 0; i < 8; ++i) {
    lines.emplace_back(Vec3(0, 0, i), Vec3(1, 0, i));
  }
  CHECK_THROWS_AS(estimate_principal_directions_3d(lines), InsufficientStructure);
}

TEST_CASE("direction estimation is rotation-equivariant") {
  SceneSpec spec;
  spec.seed = 21;
  const SyntheticScene scene = generate_scene(spec);
  const DirectionTriplet base = estimate_principal_directions_2d(scene.lines2d);
  Rng rng(22);
  const Rotation r0 = oracle::random_rotation(rng);
  std::vector<SphericalSegment> rotated;
  for (const auto& seg : scene.lines2d) {
    rotated.emplace_back(r0 * seg.start(), r0 * seg.end());
  }
  const DirectionTriplet got = estimate_principal_directions_2d(rotated);
  const std::array<Vec3, 3> expected = {r0 * base[0].vec(), r0 * base[1].vec(),
                                        r0 * base[2].vec()};
  CHECK(triplet_axis_error_deg(got, expected) < 0.5);
}

TEST_CASE("cluster_lines_3d: exact axis-parallel lines, no discards") {
  const auto lines = box_wireframe(Vec3::Zero(), Vec3(4, 3, 2));
  const DirectionTriplet axes;
  const auto clusters = cluster_lines_3d(lines, axes, deg_to_rad(10.0));
  CHECK(clusters.clusters[0].size() == 4);
  CHECK(clusters.clusters[1].size() == 4);
  CHECK(clusters.clusters[2].size() == 4);
}

TEST_CASE("cluster_lines_3d discards a diagonal line") {
  auto lines = box_wireframe(Vec3::Zero(), Vec3(4, 3, 2));
  lines.emplace_back(Vec3::Zero(), Vec3(1, 1, 1));  // 54.7 deg from every axis
  const auto labels = cluster_labels_3d(lines, DirectionTriplet{}, deg_to_rad(10.0));
  CHECK(labels.back() == -1);
  CHECK(std::count(labels.begin(), labels.end(), -1) == 1);
}

TEST_CASE("cluster_lines_2d: deviation is normal-based") {
  Rng rng(25);
  std::vector<SphericalSegment> arcs;
  std::vector<int> truth;
  const std::array<Vec3, 3> axes = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
  for (int k = 0; k < 3; ++k) {
    for (const auto& arc : arcs_through_axis(axes[k], 5, rng)) {
      arcs.push_back(arc);
      truth.push_back(k);
    }
  }
  // a line far from every direction: normal along (1,1,1)/sqrt(3)
  arcs.push_back(arc_with_normal(Vec3(1, 1, 1).normalized(), 0.3, 0.8, rng));
  truth.push_back(-1);

  const auto labels = cluster_labels_2d(arcs, DirectionTriplet{}, deg_to_rad(10.0));
  CHECK(labels == truth);
  const auto clusters = cluster_lines_2d(arcs, DirectionTriplet{}, deg_to_rad(10.0));
  CHECK(clusters.clusters[0].size() == 5);
  CHECK(clusters.clusters[1].size() == 5);
  CHECK(clusters.clusters[2].size() == 5);
}

TEST_CASE("cluster label agreement on a noisy rendered scene") {
  SceneSpec spec;
  spec.seed = 33;
  spec.noise.sigma_rad = deg_to_rad(0.3);
  const SyntheticScene scene = generate_scene(spec);
  const DirectionTriplet d2d = estimate_principal_directions_2d(scene.lines2d);
  const auto labels = cluster_labels_2d(scene.lines2d, d2d, deg_to_rad(10.0));

  // map estimated directions onto the generator's rotated axes
  const Mat3 r = scene.gt_pose.rotation.matrix();
  std::array<int, 3> to_axis{};
  for (int i = 0; i < 3; ++i) {
    double best = 1e9;
    for (int a = 0; a < 3; ++a) {
      const double ang = axis_angle_deg(d2d[i], UnitVector::normalized(r.col(a)));
      if (ang < best) {
        best = ang;
        to_axis[i] = a;
      }
    }
  }
  // generator label: the scene renders box edges in axis order; recover the
  // truth from each line's great-circle normal against the rotated axes
  std::size_t kept = 0, agree = 0;
  for (std::size_t i = 0; i < scene.lines2d.size(); ++i) {
    if (labels[i] < 0) continue;
    ++kept;
    int truth = 0;
    double best = 1e9;
    for (int a = 0; a < 3; ++a) {
      const double dev =
          std::abs(scene.lines2d[i].normal().dot(r.col(a)));
      if (dev < best) {
        best = dev;
        truth = a;
      }
    }
    if (to_axis[labels[i]] == truth) ++agree;
  }
  CHECK(kept > 0);
  CHECK(double(agree) / double(kept) >= 0.99);
}

TEST_CASE("cluster_lines throws EmptyCluster when a direction has no lines") {
  Rng rng(27);
  std::vector<SphericalSegment> arcs = arcs_through_axis(Vec3::UnitX(), 4, rng);
  const auto more = arcs_through_axis(Vec3::UnitY(), 4, rng);
  arcs.insert(arcs.end(), more.begin(), more.end());
  CHECK_THROWS_AS(cluster_lines_2d(arcs, DirectionTriplet{}, deg_to_rad(10.0)),
                  EmptyCluster);
}

TEST_CASE("filter_lines_by_length") {
  Rng rng(29);
  SUBCASE("all long lines are kept") {
    std::vector<Segment3D> l3;
    for (int i = 0; i < 5; ++i) l3.emplace_back(Vec3(0, 0, i), Vec3(1, 0, i));
    std::vector<SphericalSegment> l2;
    for (int i = 0; i < 7; ++i) l2.push_back(oracle::random_arc(rng));
    const auto [k3, k2] = filter_lines_by_length(l3, l2);
    CHECK(k3.size() == 5);
    CHECK(k2.size() == 7);
  }
  SUBCASE("ratio rule, forced arithmetic") {
    std::vector<Segment3D> l3{
        {Vec3::Zero(), Vec3(0.1, 0, 0)},
        {Vec3::Zero(), Vec3(0.3, 0, 0)},
        {Vec3::Zero(), Vec3(0.5, 0, 0)},
        {Vec3::Zero(), Vec3(0.05, 0, 0)},
    };
    std::vector<SphericalSegment> l2;
    for (int i = 0; i < 6; ++i) l2.push_back(oracle::random_arc(rng));
    const auto [k3, k2] = filter_lines_by_length(l3, l2);
    CHECK(k3.size() == 2);  // r = 0.5
    CHECK(k2.size() == 3);  // ceil(0.5 * 6)
    // the kept 2D lines are the longest ones
    std::vector<double> lens;
    for (const auto& seg : l2) lens.push_back(seg.length());
    std::sort(lens.begin(), lens.end(), std::greater<>());
    for (const auto& seg : k2) CHECK(seg.length() >= lens[2] - 1e-12);
  }
  SUBCASE("kept 2D count is exactly the ceiling of the ratio") {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Segment3D> l3;
      const int n3 = 3 + int(rng.uniform_int(10));
      for (int i = 0; i < n3; ++i) {
        const Vec3 a = rng.gaussian_vec3();
        l3.emplace_back(a, a + rng.uniform(0.05, 1.0) * rng.unit_vec3());
      }
      std::vector<SphericalSegment> l2;
      const int n2 = 1 + int(rng.uniform_int(12));
      for (int i = 0; i < n2; ++i) l2.push_back(oracle::random_arc(rng));
      const auto [k3, k2] = filter_lines_by_length(l3, l2);
      const double r = double(k3.size()) / double(n3);
      CHECK(k2.size() == std::size_t(std::ceil(r * n2)));
    }
  }
}

TEST_CASE("extract_intersections_2d: two crossing arcs") {
  // equator arc covering +y, and a meridian (normal +x) arc covering +y
  Rng rng(31);
  LineClusters2D clusters;
  clusters.clusters[0].emplace_back(UnitVector::normalized(Vec3(1, 1, 0)),
                                    UnitVector::normalized(Vec3(-1, 1, 0)));
  clusters.clusters[1].emplace_back(UnitVector::normalized(Vec3(0, 1, -1)),
                                    UnitVector::normalized(Vec3(0, 1, 1)));
  const auto inter = extract_intersections_2d(clusters, 0.1);
  REQUIRE(inter.groups[0].size() == 1);
  CHECK(inter.groups[1].empty());
  CHECK(inter.groups[2].empty());
  const auto& p = inter.groups[0][0];
  CHECK((p.position.vec() - Vec3::UnitY()).norm() < 1e-12);
  CHECK(segment_distance(p.position, clusters.clusters[0][0]) < 1e-12);
  CHECK(segment_distance(p.position, clusters.clusters[1][0]) < 1e-12);
  CHECK(p.pair_index == 0);
  CHECK(p.parent_lines[0] == 0);
  CHECK(p.parent_lines[1] == 0);
}

TEST_CASE("extract_intersections_2d: distant arcs yield nothing") {
  LineClusters2D clusters;
  clusters.clusters[0].emplace_back(UnitVector::normalized(Vec3(1, 0.3, 0)),
                                    UnitVector::normalized(Vec3(1, -0.3, 0)));
  clusters.clusters[1].emplace_back(UnitVector::normalized(Vec3(-1, 0, 0.3)),
                                    UnitVector::normalized(Vec3(-1, 0, -0.3)));
  const auto inter = extract_intersections_2d(clusters, 0.1);
  CHECK(inter.total() == 0);
}

TEST_CASE("extract_intersections_2d is rotation-equivariant") {
  SceneSpec spec;
  spec.seed = 35;
  const SyntheticScene scene = generate_scene(spec);
  const DirectionTriplet d2d = estimate_principal_directions_2d(scene.lines2d);
  const auto clusters = cluster_lines_2d(scene.lines2d, d2d, deg_to_rad(10.0));
  const auto base = extract_intersections_2d(clusters, 0.1);

  Rng rng(36);
  const Rotation r0 = oracle::random_rotation(rng);
  LineClusters2D rotated;
  for (int c = 0; c < 3; ++c) {
    for (const auto& seg : clusters.clusters[c]) {
      rotated.clusters[c].emplace_back(r0 * seg.start(), r0 * seg.end());
    }
  }
  const auto got = extract_intersections_2d(rotated, 0.1);
  REQUIRE(got.total() == base.total());
  for (int p = 0; p < 3; ++p) {
    REQUIRE(got.groups[p].size() == base.groups[p].size());
    for (std::size_t i = 0; i < got.groups[p].size(); ++i) {
      const Vec3 expect = r0 * base.groups[p][i].position.vec();
      CHECK((got.groups[p][i].position.vec() - expect).norm() < 1e-9);
    }
  }
}

TEST_CASE("extract_intersections_3d: crossing perpendicular segments") {
  LineClusters3D clusters;
  clusters.clusters[0].emplace_back(Vec3(-1, 0, 0), Vec3(1, 0, 0));
  clusters.clusters[1].emplace_back(Vec3(0.3, -1, 0), Vec3(0.3, 1, 0));
  const auto inter = extract_intersections_3d(clusters, 0.15);
  REQUIRE(inter.groups[0].size() == 1);
  CHECK((inter.groups[0][0].position - Vec3(0.3, 0, 0)).norm() < 1e-12);
}

TEST_CASE("extract_intersections_3d rejects far skew lines") {
  LineClusters3D clusters;
  clusters.clusters[0].emplace_back(Vec3(-1, 0, 0), Vec3(1, 0, 0));
  clusters.clusters[1].emplace_back(Vec3(0, -1, 0.4), Vec3(0, 1, 0.4));
  const auto inter = extract_intersections_3d(clusters, 0.15);
  CHECK(inter.total() == 0);  // midpoint is 0.2 m from each line
}

TEST_CASE("extract_intersections_3d recovers box corners exactly") {
  const auto lines = box_wireframe(Vec3(1, 2, 0.5), Vec3(4, 5, 2.5));
  const auto clusters = cluster_lines_3d(lines, DirectionTriplet{}, deg_to_rad(10.0));
  const auto inter = extract_intersections_3d(clusters, 0.15);
  std::vector<Vec3> corners;
  for (double x : {1.0, 4.0}) {
    for (double y : {2.0, 5.0}) {
      for (double z : {0.5, 2.5}) corners.emplace_back(x, y, z);
    }
  }
  for (int p = 0; p < 3; ++p) {
    REQUIRE(inter.groups[p].size() == 8);
    for (const auto& point : inter.groups[p]) {
      double best = 1e9;
      for (const auto& c : corners) best = std::min(best, (point.position - c).norm());
      CHECK(best < 1e-6);
    }
  }
}

TEST_CASE("2D intersections of a clean box scene sit on the projected corners") {
  SceneSpec spec;
  spec.seed = 38;
  spec.furniture_count = 0;  // bare room: corners are the only intersections
  const SyntheticScene scene = generate_scene(spec);
  const auto d2d = estimate_principal_directions_2d(scene.lines2d);
  const auto c2 = cluster_lines_2d(scene.lines2d, d2d, deg_to_rad(10.0));
  const auto i2 = extract_intersections_2d(c2, 0.1);
  REQUIRE(i2.total() >= 8);

  const auto d3d = estimate_principal_directions_3d(scene.lines3d);
  const auto c3 = cluster_lines_3d(scene.lines3d, d3d, deg_to_rad(10.0));
  const auto i3 = extract_intersections_3d(c3, 0.15);
  for (int p = 0; p < 3; ++p) {
    for (const auto& point : i2.groups[p]) {
      double best = 1e9;
      for (int q = 0; q < 3; ++q) {
        for (const auto& corner : i3.groups[q]) {
          const UnitVector proj = project_point(corner.position, scene.gt_pose);
          best = std::min(best, spherical_distance(point.position, proj));
        }
      }
      CHECK(best < 0.01);
    }
  }
}

TEST_CASE("reconcile_directions_2d repairs a corrupted axis from the 3D pattern") {
  SceneSpec spec;
  spec.seed = 43;
  const SyntheticScene scene = generate_scene(spec);
  const Mat3 r = scene.gt_pose.rotation.matrix();
  const DirectionTriplet truth(UnitVector::normalized(r.col(0)),
                               UnitVector::normalized(r.col(1)),
                               UnitVector::normalized(r.col(2)));
  // knock one axis 25 degrees off
  Rng rng(44);
  const Rotation kick = Rotation::from_axis_angle(deg_to_rad(25.0) * rng.unit_tangent(r.col(1)));
  const DirectionTriplet broken(truth[0], kick * truth[1], truth[2]);
  const DirectionTriplet d3d;  // the box map's axes

  const DirectionTriplet fixed = reconcile_directions_2d(broken, d3d, scene.lines2d);
  CHECK(axis_angle_deg(fixed[1], truth[1]) < 1.0);
  CHECK(axis_angle_deg(fixed[0], truth[0]) < 1e-9);

  SUBCASE("a consistent triplet passes through untouched") {
    const DirectionTriplet same = reconcile_directions_2d(truth, d3d, scene.lines2d);
    for (int i = 0; i < 3; ++i) {
      CHECK(axis_angle_deg(same[i], truth[i]) < 1e-12);
    }
  }
  SUBCASE("non-orthogonal 3D patterns disable the repair") {
    const DirectionTriplet skewed(
        UnitVector(Vec3::UnitX()),
        UnitVector::normalized(Vec3(0.5, 1.0, 0.0)),
        UnitVector(Vec3::UnitZ()));
    const DirectionTriplet same = reconcile_directions_2d(broken, skewed, scene.lines2d);
    CHECK(axis_angle_deg(same[1], broken[1]) < 1e-12);
  }
}

TEST_CASE("projected 3D intersections land near recovered 2D intersections") {
  // closure under projection on a clean scene: within 2 * delta_2d
  SceneSpec spec;
  spec.seed = 39;
  spec.furniture_count = 2;
  const SyntheticScene scene = generate_scene(spec);

  const auto d3d = estimate_principal_directions_3d(scene.lines3d);
  const auto c3 = cluster_lines_3d(scene.lines3d, d3d, deg_to_rad(10.0));
  const auto i3 = extract_intersections_3d(c3, 0.15);

  const auto d2d = estimate_principal_directions_2d(scene.lines2d);
  const auto c2 = cluster_lines_2d(scene.lines2d, d2d, deg_to_rad(10.0));
  const auto i2 = extract_intersections_2d(c2, 0.1);
  REQUIRE(i2.total() > 0);

  for (int p = 0; p < 3; ++p) {
    for (const auto& point : i3.groups[p]) {
      UnitVector ray = project_point(point.position, scene.gt_pose);
      double best = 1e9;
      for (int q = 0; q < 3; ++q) {
        for (const auto& cand : i2.groups[q]) {
          best = std::min(best, spherical_distance(ray, cand.position));
        }
      }
      CHECK(best <= 0.2);  // 2 * delta_2d
    }
  }
}

TEST_CASE("cluster labeling is a partition of the kept lines") {
  SceneSpec spec;
  spec.seed = 41;
  spec.noise.clutter = 0.2;
  const SyntheticScene scene = generate_scene(spec);
  const auto d2d = estimate_principal_directions_2d(scene.lines2d);
  const auto labels = cluster_labels_2d(scene.lines2d, d2d, deg_to_rad(10.0));
  const auto clusters = cluster_lines_2d(scene.lines2d, d2d, deg_to_rad(10.0));
  const std::size_t kept =
      labels.size() - std::count(labels.begin(), labels.end(), -1);
  CHECK(clusters.clusters[0].size() + clusters.clusters[1].size() +
            clusters.clusters[2].size() ==
        kept);
}

TEST_SUITE_END();
