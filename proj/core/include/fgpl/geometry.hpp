#pragma once

#include <atomic>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "fgpl/errors.hpp"

namespace fgpl {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kUnitTol = 1e-9;
inline constexpr double kProjectionEps = 1e-6;  // meters

inline double clamp_unit(double x) { return x < -1.0 ? -1.0 : (x > 1.0 ? 1.0 : x); }

double deg_to_rad(double deg);
double rad_to_deg(double rad);

/// A point on S². Construction checks ‖v‖ = 1 within 1e-9; use normalized()
/// to build from an arbitrary nonzero vector.
class UnitVector {
 public:
  UnitVector() : v_(1.0, 0.0, 0.0) {}
  explicit UnitVector(const Vec3& v);
  static UnitVector normalized(const Vec3& v);

  const Vec3& vec() const { return v_; }
  double x() const { return v_.x(); }
  double y() const { return v_.y(); }
  double z() const { return v_.z(); }
  double dot(const UnitVector& o) const { return v_.dot(o.v_); }
  UnitVector operator-() const { return UnitVector(Vec3(-v_)); }

 private:
  Vec3 v_;
};

/// Minor great-circle arc between two non-identical, non-antipodal points.
class SphericalSegment {
 public:
  SphericalSegment(const UnitVector& start, const UnitVector& end);

  const UnitVector& start() const { return start_; }
  const UnitVector& end() const { return end_; }
  /// Unit normal of the supporting great circle, (s×e)/‖s×e‖.
  const Vec3& normal() const { return normal_; }
  /// Arc length in radians.
  double length() const { return length_; }

 private:
  UnitVector start_;
  UnitVector end_;
  Vec3 normal_;
  double length_;
};

/// Finite 3D line segment in meters.
class Segment3D {
 public:
  Segment3D(const Vec3& start, const Vec3& end);

  const Vec3& start() const { return start_; }
  const Vec3& end() const { return end_; }
  double length() const { return (end_ - start_).norm(); }
  /// Unit direction (end − start)/‖·‖.
  Vec3 direction() const { return (end_ - start_).normalized(); }

 private:
  Vec3 start_;
  Vec3 end_;
};

/// Proper rotation (SO(3)). Construction validates RᵀR = I and det = +1
/// within 1e-9; use project() to snap a drifted matrix back to the manifold.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}
  static Rotation identity() { return Rotation(); }
  static Rotation from_matrix(const Mat3& m);
  /// Rodrigues exponential of an axis-angle vector.
  static Rotation from_axis_angle(const Vec3& w);
  /// Nearest rotation to an arbitrary matrix (polar factor via SVD).
  static Rotation project(const Mat3& m);

  const Mat3& matrix() const { return m_; }
  Rotation inverse() const;
  Rotation operator*(const Rotation& o) const;
  Vec3 operator*(const Vec3& v) const { return m_ * v; }
  UnitVector operator*(const UnitVector& v) const {
    return UnitVector::normalized(m_ * v.vec());
  }

 private:
  struct Unchecked {};
  Rotation(const Mat3& m, Unchecked) : m_(m) {}
  Mat3 m_;
};

/// World-to-camera pose: a world point p maps to the camera ray Π(R[p − t]).
struct Pose {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();
};

/// Geodesic distance on S², in [0, π]. Inputs are clamped before arccos.
double spherical_distance(const UnitVector& a, const UnitVector& b);

/// Distance from x to the closest point of the minor arc.
///
/// If the great-circle projection of x lands on the arc the distance is the
/// perpendicular arcsin|⟨x,n⟩|, otherwise the closer endpoint distance.
double segment_distance(const UnitVector& x, const SphericalSegment& seg);

/// Spherical projection Π(R[p − t]). Throws DegenerateProjection when the
/// camera center coincides with the point (‖p − t‖ ≤ 1e-6 m).
UnitVector project_point(const Vec3& p, const Pose& pose);

/// Projects both endpoints; throws AntipodalSegment when the segment passes
/// through the camera center, DegenerateProjection when it is seen end-on.
SphericalSegment project_segment(const Segment3D& seg, const Pose& pose);

/// Least-squares rotation R minimizing Σ‖d_i − R d̃_i‖² over (d, d̃) pairs,
/// constrained to det(R) = +1. Throws DegenerateConfiguration when the
/// directions are all collinear.
Rotation kabsch_rotation(const std::vector<std::pair<UnitVector, UnitVector>>& pairs);

/// Geodesic angle between two rotations, in degrees.
double rotation_geodesic_error(const Rotation& a, const Rotation& b);

namespace instrument {
/// Counts project_point / project_segment endpoint projections. The pose
/// search path must not touch it at query time.
std::atomic<std::uint64_t>& projection_counter();
}  // namespace instrument

}  // namespace fgpl
