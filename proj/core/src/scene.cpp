#include "fgpl/scene.hpp"

#include <algorithm>
#include <cmath>

#include "fgpl/input_prep.hpp"
#include "fgpl/rng.hpp"

namespace fgpl {

std::vector<Segment3D> box_wireframe(const Vec3& lo, const Vec3& hi) {
  std::vector<Segment3D> edges;
  edges.reserve(12);
  // per axis, the four edges parallel to it
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    for (int bu = 0; bu < 2; ++bu) {
      for (int bv = 0; bv < 2; ++bv) {
        Vec3 a, b;
        a(axis) = lo(axis);
        b(axis) = hi(axis);
        a(u) = b(u) = bu ? hi(u) : lo(u);
        a(v) = b(v) = bv ? hi(v) : lo(v);
        edges.emplace_back(a, b);
      }
    }
  }
  return edges;
}

namespace {

double distance_to_lines(const Vec3& p, const std::vector<Segment3D>& lines) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& seg : lines) {
    best = std::min(best, point_segment_distance_3d(p, seg));
  }
  return best;
}

UnitVector jitter(const UnitVector& v, double sigma, Rng& rng) {
  const double angle = rng.normal(0.0, sigma);
  const Vec3 tangent = rng.unit_tangent(v.vec());
  return UnitVector::normalized(std::cos(angle) * v.vec() + std::sin(angle) * tangent);
}

}  // namespace

SyntheticScene generate_scene(const SceneSpec& spec) {
  if ((spec.room_size.array() <= 0.0).any()) {
    throw ConfigError("generate_scene: room dimensions must be positive");
  }
  Rng rng(spec.seed);
  SyntheticScene scene;
  scene.seed = spec.seed;
  scene.noise = spec.noise;
  scene.room_size = spec.room_size;

  scene.lines3d = box_wireframe(Vec3::Zero(), spec.room_size);
  for (int i = 0; i < spec.furniture_count; ++i) {
    Vec3 size, corner;
    for (int a = 0; a < 3; ++a) {
      const double max_size = std::min(1.3, spec.room_size(a) / 3.0);
      size(a) = rng.uniform(std::min(0.35, max_size), max_size);
      corner(a) = rng.uniform(0.05, spec.room_size(a) - size(a) - 0.05);
    }
    const auto edges = box_wireframe(corner, corner + size);
    scene.lines3d.insert(scene.lines3d.end(), edges.begin(), edges.end());
  }

  if (spec.fixed_pose) {
    scene.gt_pose = *spec.fixed_pose;
    const Vec3& t = scene.gt_pose.translation;
    if ((t.array() < 0.0).any() || (t.array() > spec.room_size.array()).any()) {
      throw PoseOutsideRoom("generate_scene: fixed pose outside the room");
    }
  } else {
    Vec3 t;
    for (int attempt = 0;; ++attempt) {
      for (int a = 0; a < 3; ++a) {
        const double margin = std::min(spec.wall_margin, spec.room_size(a) / 4.0);
        t(a) = rng.uniform(margin, spec.room_size(a) - margin);
      }
      if (distance_to_lines(t, scene.lines3d) >= spec.min_line_clearance) break;
      if (attempt > 1000) break;  // degenerate spec; accept the last sample
    }
    scene.gt_pose = Pose{Rotation::from_matrix(rng.rotation_matrix()), t};
  }

  // render, then apply noise in a fixed order to keep the stream stable
  std::vector<SphericalSegment> clean;
  for (const auto& seg : scene.lines3d) {
    try {
      clean.push_back(project_segment(seg, scene.gt_pose));
    } catch (const DegenerateProjection&) {
    } catch (const AntipodalSegment&) {
    }
  }

  for (const auto& seg : clean) {
    SphericalSegment noisy = seg;
    if (spec.noise.sigma_rad > 0.0) {
      const UnitVector s = jitter(seg.start(), spec.noise.sigma_rad, rng);
      const UnitVector e = jitter(seg.end(), spec.noise.sigma_rad, rng);
      try {
        noisy = SphericalSegment(s, e);
      } catch (const DegenerateSegment&) {
        continue;
      }
    }
    if (spec.noise.dropout > 0.0 && rng.uniform() < spec.noise.dropout) continue;
    scene.lines2d.push_back(noisy);
  }

  const long n_clutter = std::lround(spec.noise.clutter * double(clean.size()));
  for (long i = 0; i < n_clutter; ++i) {
    const Vec3 n = rng.unit_vec3();
    const Vec3 u = rng.unit_tangent(n);
    const Vec3 w = n.cross(u);
    const double phi = rng.uniform(0.0, 2.0 * M_PI);
    const double len = rng.uniform(deg_to_rad(5.0), deg_to_rad(40.0));
    const Vec3 s = std::cos(phi) * u + std::sin(phi) * w;
    const Vec3 e = std::cos(phi + len) * u + std::sin(phi + len) * w;
    scene.lines2d.emplace_back(UnitVector::normalized(s), UnitVector::normalized(e));
  }
  return scene;
}

}  // namespace fgpl
