#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fgpl/geometry.hpp"

namespace fgpl {

struct NoiseSpec {
  double sigma_rad = 0.0;  // endpoint angular jitter
  double dropout = 0.0;    // per-line drop probability
  double clutter = 0.0;    // fraction of random arcs added
};

struct SceneSpec {
  Vec3 room_size = Vec3(6.0, 5.0, 3.0);
  int furniture_count = 3;
  NoiseSpec noise;
  std::uint64_t seed = 0;
  /// When set, used as the ground-truth pose instead of sampling one.
  std::optional<Pose> fixed_pose;
  double wall_margin = 0.5;        // pose sampling margin from the walls
  double min_line_clearance = 0.2; // min camera distance to any 3D line
};

/// An axis-aligned Manhattan room with furniture boxes, plus 2D lines
/// rendered from the ground-truth pose. Deterministic under a fixed seed;
/// with zero noise every 2D segment equals the projection of its 3D source.
struct SyntheticScene {
  std::vector<Segment3D> lines3d;
  std::vector<SphericalSegment> lines2d;
  Pose gt_pose;
  NoiseSpec noise;
  std::uint64_t seed = 0;
  Vec3 room_size = Vec3::Zero();
};

/// The 12 edges of an axis-aligned box.
std::vector<Segment3D> box_wireframe(const Vec3& lo, const Vec3& hi);

SyntheticScene generate_scene(const SceneSpec& spec);

}  // namespace fgpl
