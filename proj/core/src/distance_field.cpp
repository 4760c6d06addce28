#include "fgpl/distance_field.hpp"

#include <cmath>
#include <limits>

namespace fgpl {

double eval_line_distance(const UnitVector& x, const std::vector<SphericalSegment>& lines) {
  double best = M_PI;
  for (const auto& seg : lines) {
    const double d = segment_distance(x, seg);
    if (d < best) best = d;
  }
  return best;
}

double eval_point_distance(const UnitVector& x, const std::vector<UnitVector>& points,
                           double gamma) {
  double best = M_PI;
  for (const auto& p : points) {
    const double d = spherical_distance(x, p);
    if (d < best) best = d;
  }
  return std::pow(best, gamma);
}

DistanceField line_field_2d(const std::vector<SphericalSegment>& lines,
                            const QueryGrid& grid, std::int32_t tag) {
  if (lines.empty()) throw EmptyInput("line_field_2d: empty cluster");
  DistanceField field{FieldKind::line, tag, {}};
  field.values.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    field.values[k] =
        static_cast<float>(eval_line_distance(UnitVector(grid.point(k)), lines));
  }
  return field;
}

DistanceField point_field_2d(const std::vector<UnitVector>& points, const QueryGrid& grid,
                             double gamma, std::int32_t tag) {
  if (points.empty()) throw EmptyInput("point_field_2d: empty cluster");
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw ConfigError("point_field_2d: gamma must be in (0, 1]");
  }
  DistanceField field{FieldKind::point, tag, {}};
  field.values.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    field.values[k] =
        static_cast<float>(eval_point_distance(UnitVector(grid.point(k)), points, gamma));
  }
  return field;
}

DistanceField line_field_3d(const std::vector<Segment3D>& lines, const Vec3& translation,
                            const QueryGrid& grid, std::int32_t tag) {
  const Pose pose{Rotation::identity(), translation};
  std::vector<SphericalSegment> projected;
  projected.reserve(lines.size());
  for (const auto& seg : lines) {
    try {
      projected.push_back(project_segment(seg, pose));
    } catch (const DegenerateProjection&) {
    } catch (const AntipodalSegment&) {
    }
  }
  if (projected.empty()) {
    throw EmptyInput("line_field_3d: all segments degenerate at this translation");
  }
  return line_field_2d(projected, grid, tag);
}

DistanceField point_field_3d(const std::vector<Vec3>& points, const Vec3& translation,
                             const QueryGrid& grid, double gamma, std::int32_t tag) {
  const Pose pose{Rotation::identity(), translation};
  std::vector<UnitVector> projected;
  projected.reserve(points.size());
  for (const auto& p : points) {
    try {
      projected.push_back(project_point(p, pose));
    } catch (const DegenerateProjection&) {
    }
  }
  if (projected.empty()) {
    throw EmptyInput("point_field_3d: all points degenerate at this translation");
  }
  return point_field_2d(projected, grid, gamma, tag);
}

RotationNNMap build_rotation_nn_map(const Rotation& rotation, const QueryGrid& grid) {
  RotationNNMap map;
  map.indices.resize(grid.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Vec3 target = rotation * grid.point(k);
    const int idx = grid.nearest(target);
    map.indices[k] = idx;
    const double d = std::acos(clamp_unit(grid.point(idx).dot(target)));
    if (d > worst) worst = d;
  }
  map.max_mapped_distance = worst;
  if (worst > grid.delta() + 1e-12) {
    throw DensityViolation("build_rotation_nn_map: grid density precondition violated");
  }
  return map;
}

DistanceField rotate_field(const DistanceField& field, const RotationNNMap& nn_map) {
  if (field.values.size() != nn_map.indices.size()) {
    throw GridMismatch("rotate_field: field and nn map built on different grids");
  }
  DistanceField out{field.kind, field.cluster_tag, {}};
  out.values.resize(field.values.size());
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    out.values[k] = field.values[nn_map.indices[k]];
  }
  return out;
}

long field_cost(const DistanceField& a, const DistanceField& b, double tau) {
  if (a.values.size() != b.values.size()) {
    throw GridMismatch("field_cost: fields sampled on different grids");
  }
  if (a.kind != b.kind) {
    throw GridMismatch("field_cost: cannot compare line and point fields");
  }
  const float tau_f = static_cast<float>(tau);
  const float* pa = a.values.data();
  const float* pb = b.values.data();
  const std::size_t n = a.values.size();
  long inliers = 0;
  for (std::size_t k = 0; k < n; ++k) {
    inliers += std::fabs(pa[k] - pb[k]) < tau_f ? 1 : 0;
  }
  return -inliers;
}

}  // namespace fgpl
