#include "fgpl/geometry.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace fgpl {

double deg_to_rad(double deg) { return deg * M_PI / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / M_PI; }

UnitVector::UnitVector(const Vec3& v) : v_(v) {
  if (std::abs(v.norm() - 1.0) > kUnitTol) {
    throw DegenerateConfiguration("UnitVector: input is not unit length");
  }
}

UnitVector UnitVector::normalized(const Vec3& v) {
  const double n = v.norm();
  if (n < 1e-12) {
    throw DegenerateConfiguration("UnitVector: cannot normalize near-zero vector");
  }
  UnitVector u;
  u.v_ = v / n;
  return u;
}

SphericalSegment::SphericalSegment(const UnitVector& start, const UnitVector& end)
    : start_(start), end_(end) {
  const double c = start.dot(end);
  if (std::abs(c) >= 1.0 - kUnitTol) {
    throw DegenerateSegment("SphericalSegment: endpoints identical or antipodal");
  }
  const Vec3 cross = start.vec().cross(end.vec());
  normal_ = cross.normalized();
  length_ = std::acos(clamp_unit(c));
}

Segment3D::Segment3D(const Vec3& start, const Vec3& end) : start_(start), end_(end) {
  if ((end - start).squaredNorm() <= 0.0) {
    throw DegenerateSegment("Segment3D: zero-length segment");
  }
}

Rotation Rotation::from_matrix(const Mat3& m) {
  const double ortho = (m.transpose() * m - Mat3::Identity()).norm();
  if (ortho > 10 * kUnitTol || std::abs(m.determinant() - 1.0) > 10 * kUnitTol) {
    throw DegenerateConfiguration("Rotation: matrix is not a proper rotation");
  }
  return Rotation(m, Unchecked{});
}

Rotation Rotation::from_axis_angle(const Vec3& w) {
  const double theta = w.norm();
  if (theta < 1e-12) return Rotation();
  const Vec3 axis = w / theta;
  Mat3 k;
  k << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
  const Mat3 m = Mat3::Identity() + std::sin(theta) * k + (1.0 - std::cos(theta)) * k * k;
  return Rotation(m, Unchecked{});
}

Rotation Rotation::project(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1.0;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return Rotation(r, Unchecked{});
}

Rotation Rotation::inverse() const { return Rotation(m_.transpose(), Unchecked{}); }

Rotation Rotation::operator*(const Rotation& o) const {
  return Rotation(Mat3(m_ * o.m_), Unchecked{});
}

double spherical_distance(const UnitVector& a, const UnitVector& b) {
  return std::acos(clamp_unit(a.dot(b)));
}

double segment_distance(const UnitVector& x, const SphericalSegment& seg) {
  const Vec3& n = seg.normal();
  const double c = x.vec().dot(n);
  const Vec3 p_raw = x.vec() - c * n;
  const double p_norm = p_raw.norm();
  if (p_norm < 1e-12) return M_PI / 2.0;  // x at the pole of the circle
  const Vec3 p = p_raw / p_norm;

  const Vec3& s = seg.start().vec();
  const Vec3& e = seg.end().vec();
  const Vec3 se = s.cross(e);
  const bool on_arc = s.cross(p).dot(se) > 0.0 && e.cross(p).dot(-se) > 0.0;
  if (on_arc) return std::asin(clamp_unit(std::abs(c)));
  const double ds = std::acos(clamp_unit(x.vec().dot(s)));
  const double de = std::acos(clamp_unit(x.vec().dot(e)));
  return ds < de ? ds : de;
}

UnitVector project_point(const Vec3& p, const Pose& pose) {
  instrument::projection_counter().fetch_add(1, std::memory_order_relaxed);
  const Vec3 v = pose.rotation * (p - pose.translation);
  const double n = v.norm();
  if (n <= kProjectionEps) {
    throw DegenerateProjection("project_point: point coincides with camera center");
  }
  return UnitVector::normalized(v);
}

SphericalSegment project_segment(const Segment3D& seg, const Pose& pose) {
  const UnitVector a = project_point(seg.start(), pose);
  const UnitVector b = project_point(seg.end(), pose);
  const double c = a.dot(b);
  if (c <= -1.0 + kUnitTol) {
    throw AntipodalSegment("project_segment: segment passes through camera center");
  }
  if (c >= 1.0 - kUnitTol) {
    throw DegenerateProjection("project_segment: segment seen end-on");
  }
  return SphericalSegment(a, b);
}

Rotation kabsch_rotation(const std::vector<std::pair<UnitVector, UnitVector>>& pairs) {
  if (pairs.size() < 2) {
    throw DegenerateConfiguration("kabsch_rotation: need at least 2 pairs");
  }
  Mat3 h = Mat3::Zero();
  for (const auto& [d, d_src] : pairs) {
    h += d_src.vec() * d.vec().transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (sv(1) <= 1e-9 * std::max(sv(0), 1e-300)) {
    throw DegenerateConfiguration("kabsch_rotation: directions are collinear");
  }
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Mat3 r = svd.matrixV() * d * svd.matrixU().transpose();
  return Rotation::project(r);
}

double rotation_geodesic_error(const Rotation& a, const Rotation& b) {
  const double tr = (a.matrix().transpose() * b.matrix()).trace();
  return rad_to_deg(std::acos(clamp_unit((tr - 1.0) / 2.0)));
}

namespace instrument {
std::atomic<std::uint64_t>& projection_counter() {
  static std::atomic<std::uint64_t> counter{0};
  return counter;
}
}  // namespace instrument

}  // namespace fgpl
