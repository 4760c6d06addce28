#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "fgpl/geometry.hpp"

namespace fgpl {

/// Three principal directions treated as axes (v and −v equivalent), stored
/// with canonical sign: largest-magnitude coordinate positive. No two axes
/// may be within 20° of parallel.
class DirectionTriplet {
 public:
  /// World axes.
  DirectionTriplet()
      : d_{UnitVector(Vec3::UnitX()), UnitVector(Vec3::UnitY()), UnitVector(Vec3::UnitZ())} {}
  DirectionTriplet(const UnitVector& d1, const UnitVector& d2, const UnitVector& d3);

  const UnitVector& operator[](int i) const { return d_[i]; }
  const std::array<UnitVector, 3>& axes() const { return d_; }

 private:
  std::array<UnitVector, 3> d_;
};

/// Flips v so its largest-magnitude coordinate is positive.
UnitVector canonical_sign(const UnitVector& v);

/// Angle between two axes in degrees, antipodes identified (in [0, 90]).
double axis_angle_deg(const UnitVector& a, const UnitVector& b);

struct LineClusters2D {
  std::array<std::vector<SphericalSegment>, 3> clusters;
};

struct LineClusters3D {
  std::array<std::vector<Segment3D>, 3> clusters;
};

// Cluster-pair indexing: pair p couples clusters (p, (p+1)%3), so
// p = 0 ↔ {1,2}, p = 1 ↔ {2,3}, p = 2 ↔ {3,1} in 1-based notation.
inline constexpr std::array<std::array<int, 2>, 3> kClusterPairs = {{{0, 1}, {1, 2}, {2, 0}}};

/// Pair index of the unordered cluster pair {a, b}, a ≠ b.
int pair_index_of(int a, int b);

struct IntersectionPoint2D {
  UnitVector position;
  int pair_index = 0;                   // which cluster pair produced it
  std::array<int, 2> parent_lines{};    // indices into the two parent clusters
  /// Conditioning of the position: sin of the parents' crossing angle, scaled
  /// down for short parent arcs. Endpoint jitter amplifies by its inverse.
  double weight = 1.0;
};

struct IntersectionPoint3D {
  Vec3 position = Vec3::Zero();
  int pair_index = 0;
  std::array<int, 2> parent_lines{};
};

struct IntersectionClusters2D {
  std::array<std::vector<IntersectionPoint2D>, 3> groups;  // by pair index
  std::size_t total() const {
    return groups[0].size() + groups[1].size() + groups[2].size();
  }
};

struct IntersectionClusters3D {
  std::array<std::vector<IntersectionPoint3D>, 3> groups;
  std::size_t total() const {
    return groups[0].size() + groups[1].size() + groups[2].size();
  }
};

struct VotingParams {
  int grid_level = 4;          // 2562-cell icosphere, antipodes identified
  double min_separation_deg = 20.0;
  double min_vote_fraction = 0.02;
  int min_vote_count = 3;      // effective minimum: max(3, 2% of lines)
  double incidence_tol_deg = 5.0;  // 2D: a line votes for directions on its circle
};

/// Principal directions of 2D lines via vanishing-point voting: every line is
/// extrapolated to its great circle, circles are pairwise intersected, and
/// candidate directions are binned on a geodesic grid. The top-3 bins by
/// incident-line count win; each direction is the mean of its bin's candidates.
///
/// Throws InsufficientStructure when fewer than 3 well-separated bins reach
/// the minimum vote count.
DirectionTriplet estimate_principal_directions_2d(
    const std::vector<SphericalSegment>& lines, const VotingParams& params = {});

/// Principal directions of 3D lines by voting segment directions on the same
/// geodesic grid (antipodes identified).
DirectionTriplet estimate_principal_directions_3d(
    const std::vector<Segment3D>& lines, const VotingParams& params = {});

/// Cross-checks an estimated 2D triplet against the pairwise-angle pattern of
/// the (clutter-free) 3D triplet, which any rotation preserves. When the 3D
/// axes are mutually near-orthogonal and exactly one 2D direction breaks the
/// pattern, that direction is rebuilt from the cross product of the other two
/// and refit to its incident lines. Returns the input unchanged otherwise.
DirectionTriplet reconcile_directions_2d(const DirectionTriplet& d2d,
                                         const DirectionTriplet& d3d,
                                         const std::vector<SphericalSegment>& lines,
                                         const VotingParams& params = {});

/// Per-line cluster labels: the direction index minimizing angular deviation
/// when the deviation is below theta_clus, −1 (discarded) otherwise.
/// 2D deviation is normal-based: asin|⟨n, d⟩|; 3D is direction-based:
/// acos|⟨u, d⟩|.
std::vector<int> cluster_labels_2d(const std::vector<SphericalSegment>& lines,
                                   const DirectionTriplet& directions,
                                   double theta_clus_rad);
std::vector<int> cluster_labels_3d(const std::vector<Segment3D>& lines,
                                   const DirectionTriplet& directions,
                                   double theta_clus_rad);

/// Groups lines by label. Throws EmptyCluster if any cluster ends up empty.
LineClusters2D cluster_lines_2d(const std::vector<SphericalSegment>& lines,
                                const DirectionTriplet& directions,
                                double theta_clus_rad);
LineClusters3D cluster_lines_3d(const std::vector<Segment3D>& lines,
                                const DirectionTriplet& directions,
                                double theta_clus_rad);

/// Keeps 3D segments of length ≥ min_length_m; keeps the longest
/// ⌈r·|lines2d|⌉ 2D segments by arc length, where r is the kept 3D fraction.
/// Relative input order is preserved.
std::pair<std::vector<Segment3D>, std::vector<SphericalSegment>> filter_lines_by_length(
    const std::vector<Segment3D>& lines3d, const std::vector<SphericalSegment>& lines2d,
    double min_length_m = 0.2);

/// Pairwise great-circle intersections across distinct clusters; a candidate
/// (either antipode) is kept when its segment distance to both parents is at
/// most delta_rad.
IntersectionClusters2D extract_intersections_2d(const LineClusters2D& clusters,
                                                double delta_rad = 0.1);

/// Cross-cluster intersections of extrapolated 3D lines: the common
/// perpendicular midpoint, kept when within delta_m of both finite segments.
IntersectionClusters3D extract_intersections_3d(const LineClusters3D& clusters,
                                                double delta_m = 0.15);

/// Distance from a point to a finite 3D segment.
double point_segment_distance_3d(const Vec3& p, const Segment3D& seg);

}  // namespace fgpl
