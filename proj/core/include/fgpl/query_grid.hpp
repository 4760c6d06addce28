#pragma once

#include <vector>

#include "fgpl/geometry.hpp"

namespace fgpl {

/// Fixed set Q of near-uniform query points on S² (icosphere vertices) with
/// the exact grid density delta = max_q min_{q̂≠q} d(q, q̂).
///
/// Levels 0..4 give |Q| ∈ {12, 42, 162, 642, 2562}.
class QueryGrid {
 public:
  /// Empty grid; build real ones with icosphere().
  QueryGrid() = default;

  static QueryGrid icosphere(int level);

  int level() const { return level_; }
  std::size_t size() const { return points_.size(); }
  const std::vector<Vec3>& points() const { return points_; }
  const Vec3& point(std::size_t i) const { return points_[i]; }
  double delta() const { return delta_; }

  /// Index of the grid point with maximum dot product against v (exact
  /// nearest neighbor; ties broken by lowest index). v need not be unit.
  int nearest(const Vec3& v) const;

  /// Index of the antipode of vertex i (icosphere vertex sets are symmetric
  /// under negation).
  int antipode(int i) const { return antipode_[i]; }

 private:
  int level_ = 0;
  double delta_ = 0.0;
  std::vector<Vec3> points_;
  // Struct-of-arrays copy of the coordinates for vectorized scans.
  std::vector<double> px_, py_, pz_;
  std::vector<int> antipode_;
};

}  // namespace fgpl
