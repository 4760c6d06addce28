#include "fgpl/query_grid.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>

namespace fgpl {

namespace {

struct IcoMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
};

IcoMesh base_icosahedron() {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  IcoMesh mesh;
  const double raw[12][3] = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1},
  };
  for (const auto& v : raw) {
    mesh.vertices.push_back(Vec3(v[0], v[1], v[2]).normalized());
  }
  mesh.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  return mesh;
}

IcoMesh subdivide(const IcoMesh& in) {
  IcoMesh out;
  out.vertices = in.vertices;
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const Vec3 m = (out.vertices[a] + out.vertices[b]).normalized();
    const int idx = static_cast<int>(out.vertices.size());
    out.vertices.push_back(m);
    midpoint.emplace(key, idx);
    return idx;
  };
  for (const auto& f : in.faces) {
    const int ab = mid(f[0], f[1]);
    const int bc = mid(f[1], f[2]);
    const int ca = mid(f[2], f[0]);
    out.faces.push_back({f[0], ab, ca});
    out.faces.push_back({f[1], bc, ab});
    out.faces.push_back({f[2], ca, bc});
    out.faces.push_back({ab, bc, ca});
  }
  return out;
}

}  // namespace

QueryGrid QueryGrid::icosphere(int level) {
  if (level < 0 || level > 4) {
    throw ConfigError("QueryGrid: icosphere level must be in [0, 4]");
  }
  IcoMesh mesh = base_icosahedron();
  for (int i = 0; i < level; ++i) mesh = subdivide(mesh);

  QueryGrid grid;
  grid.level_ = level;
  grid.points_ = std::move(mesh.vertices);
  const std::size_t n = grid.points_.size();
  grid.px_.resize(n);
  grid.py_.resize(n);
  grid.pz_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid.px_[i] = grid.points_[i].x();
    grid.py_[i] = grid.points_[i].y();
    grid.pz_[i] = grid.points_[i].z();
  }

  // Exact delta by exhaustive pairwise scan.
  double delta = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = -1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = grid.points_[i].dot(grid.points_[j]);
      if (d > best) best = d;
    }
    const double nn = std::acos(clamp_unit(best));
    if (nn > delta) delta = nn;
  }
  grid.delta_ = delta;

  grid.antipode_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid.antipode_[i] = grid.nearest(-grid.points_[i]);
  }
  return grid;
}

int QueryGrid::nearest(const Vec3& v) const {
  const std::size_t n = points_.size();
  const double vx = v.x(), vy = v.y(), vz = v.z();
  double best = -2.0 * (std::abs(vx) + std::abs(vy) + std::abs(vz) + 1.0);
  int best_idx = 0;
  const double* x = px_.data();
  const double* y = py_.data();
  const double* z = pz_.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] * vx + y[i] * vy + z[i] * vz;
    if (d > best) {
      best = d;
      best_idx = static_cast<int>(i);
    }
  }
  return best_idx;
}

}  // namespace fgpl
