#pragma once

#include <cstdint>
#include <vector>

#include "fgpl/geometry.hpp"
#include "fgpl/input_prep.hpp"
#include "fgpl/query_grid.hpp"

namespace fgpl {

enum class FieldKind : std::uint32_t { line = 0, point = 1 };

/// Distance-field samples over a QueryGrid. Line fields hold radians in
/// [0, π]; point fields hold sharpened distances d^γ in [0, π^γ]. Values are
/// stored as 32-bit floats — the cacheable unit of the search stage.
struct DistanceField {
  FieldKind kind = FieldKind::line;
  std::int32_t cluster_tag = 0;  // cluster index for line fields, pair index for point fields
  std::vector<float> values;
};

/// Exact double-precision evaluations of the defining min-distance formulas.
double eval_line_distance(const UnitVector& x, const std::vector<SphericalSegment>& lines);
double eval_point_distance(const UnitVector& x, const std::vector<UnitVector>& points,
                           double gamma);

/// f^L(x; L) sampled on the grid: min over segments of segment_distance.
DistanceField line_field_2d(const std::vector<SphericalSegment>& lines,
                            const QueryGrid& grid, std::int32_t tag = 0);

/// f^P(x; P) sampled on the grid: (min spherical distance)^γ.
DistanceField point_field_2d(const std::vector<UnitVector>& points, const QueryGrid& grid,
                             double gamma, std::int32_t tag = 0);

/// 3D line field at identity rotation: segments are projected at Pose(I, t)
/// and the 2D field is evaluated. Segments that clip or degenerate at t are
/// skipped; EmptyInput if all of them do.
DistanceField line_field_3d(const std::vector<Segment3D>& lines, const Vec3& translation,
                            const QueryGrid& grid, std::int32_t tag = 0);

/// 3D point field at identity rotation, analogous to line_field_3d.
DistanceField point_field_3d(const std::vector<Vec3>& points, const Vec3& translation,
                             const QueryGrid& grid, double gamma, std::int32_t tag = 0);

/// Nearest-neighbor table realizing field rotation: entry k is the grid index
/// closest to R·Q[k]. Build verifies the density precondition
/// max_q min_q̂ d(q̂, R·q) ≤ delta and throws DensityViolation otherwise.
struct RotationNNMap {
  std::vector<std::int32_t> indices;
  double max_mapped_distance = 0.0;
};

RotationNNMap build_rotation_nn_map(const Rotation& rotation, const QueryGrid& grid);

/// out[k] = field[nn_map[k]]. Given samples of the field of a set S, this
/// approximates the field of Rᵀ·S within the grid density bound.
DistanceField rotate_field(const DistanceField& field, const RotationNNMap& nn_map);

/// Robust inlier cost: −|{k : |a[k] − b[k]| < τ}| (strict), compared in
/// 32-bit floats. Lower is better.
long field_cost(const DistanceField& a, const DistanceField& b, double tau);

}  // namespace fgpl
