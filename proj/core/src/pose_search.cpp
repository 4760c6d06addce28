#include "fgpl/pose_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fgpl/parallel.hpp"

namespace fgpl {

Aabb bounding_box(const std::vector<Segment3D>& lines) {
  if (lines.empty()) throw EmptyInput("bounding_box: no segments");
  Aabb box;
  box.min = lines[0].start().cwiseMin(lines[0].end());
  box.max = lines[0].start().cwiseMax(lines[0].end());
  for (const auto& seg : lines) {
    box.min = box.min.cwiseMin(seg.start()).cwiseMin(seg.end());
    box.max = box.max.cwiseMax(seg.start()).cwiseMax(seg.end());
  }
  return box;
}

std::vector<Vec3> generate_translation_pool(const Aabb& box, int count) {
  if (count < 1) throw ConfigError("generate_translation_pool: count must be >= 1");
  const Vec3 raw_ext = box.extents();
  Vec3 ext = raw_ext.cwiseMax(1e-9);
  const double volume = ext.x() * ext.y() * ext.z();
  // Axis counts n_i = max(1, ceil(ext_i * k)) at the smallest scale k whose
  // cell product reaches `count`. The candidate scales are where some axis
  // count increments; k0 always satisfies the bound since Π ext_i*k0 = count.
  const double k0 = std::cbrt(double(count) / volume);
  const auto counts_at = [&](double k) {
    std::array<long, 3> n;
    for (int a = 0; a < 3; ++a) {
      n[a] = std::max<long>(1, long(std::ceil(ext(a) * k - 1e-12)));
    }
    return n;
  };
  std::vector<double> scales{k0};
  for (int a = 0; a < 3; ++a) {
    for (long m = 1; m <= long(std::ceil(ext(a) * k0)); ++m) {
      scales.push_back(double(m) / ext(a));
    }
  }
  std::sort(scales.begin(), scales.end());
  std::array<long, 3> n = counts_at(k0);
  for (double k : scales) {
    const auto cand = counts_at(k);
    if (cand[0] * cand[1] * cand[2] >= count) {
      n = cand;
      break;
    }
  }
  while (n[0] * n[1] * n[2] < count) {
    // fp guard; unreachable in exact arithmetic
    int widest = 0;
    for (int a = 1; a < 3; ++a) {
      if (ext(a) / double(n[a]) > ext(widest) / double(n[widest])) widest = a;
    }
    ++n[widest];
  }

  struct Cell {
    Vec3 p;
    double dist2;
    long ix, iy, iz;
  };
  std::vector<Cell> cells;
  cells.reserve(std::size_t(n[0] * n[1] * n[2]));
  const Vec3 center = box.center();
  for (long ix = 0; ix < n[0]; ++ix) {
    for (long iy = 0; iy < n[1]; ++iy) {
      for (long iz = 0; iz < n[2]; ++iz) {
        const Vec3 p(box.min.x() + (ix + 0.5) * raw_ext.x() / double(n[0]),
                     box.min.y() + (iy + 0.5) * raw_ext.y() / double(n[1]),
                     box.min.z() + (iz + 0.5) * raw_ext.z() / double(n[2]));
        cells.push_back({p, (p - center).squaredNorm(), ix, iy, iz});
      }
    }
  }
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
    if (a.ix != b.ix) return a.ix < b.ix;
    if (a.iy != b.iy) return a.iy < b.iy;
    return a.iz < b.iz;
  });
  cells.resize(count);

  std::vector<Vec3> pool;
  pool.reserve(cells.size());
  for (const auto& c : cells) pool.push_back(c.p);
  return pool;
}

std::vector<RotationCandidate> generate_rotation_pool(const DirectionTriplet& d2d,
                                                      const DirectionTriplet& d3d,
                                                      double max_residual_deg) {
  static constexpr std::array<std::array<int, 3>, 6> kPerms = {
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};

  std::vector<RotationCandidate> all;
  all.reserve(48);
  for (const auto& perm : kPerms) {
    for (int bits = 0; bits < 8; ++bits) {
      SigmaPermutation sigma;
      sigma.map = perm;
      for (int i = 0; i < 3; ++i) sigma.sign[i] = (bits >> i) & 1 ? -1 : 1;

      std::vector<std::pair<UnitVector, UnitVector>> pairs;
      pairs.reserve(3);
      for (int i = 0; i < 3; ++i) {
        const Vec3 src = double(sigma.sign[i]) * d3d[sigma.map[i]].vec();
        pairs.emplace_back(d2d[i], UnitVector::normalized(src));
      }
      const Rotation r = kabsch_rotation(pairs);
      double residual = 0.0;
      for (int i = 0; i < 3; ++i) {
        const Vec3 aligned = r * (double(sigma.sign[i]) * d3d[sigma.map[i]].vec());
        const double ang = std::acos(clamp_unit(aligned.dot(d2d[i].vec())));
        residual = std::max(residual, rad_to_deg(ang));
      }
      all.push_back({r, sigma, residual});
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i].residual_deg < all[best].residual_deg) best = i;
  }
  std::vector<RotationCandidate> kept;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (i == best || all[i].residual_deg <= max_residual_deg) kept.push_back(all[i]);
  }
  return kept;
}

namespace {

DistanceField sentinel_field(FieldKind kind, std::int32_t tag, std::size_t n) {
  DistanceField f{kind, tag, {}};
  f.values.assign(n, std::numeric_limits<float>::infinity());
  return f;
}

TranslationFields build_translation_fields(const LineClusters3D& lines,
                                           const std::array<std::vector<Vec3>, 3>& points,
                                           const Vec3& t, const QueryGrid& grid,
                                           double gamma) {
  TranslationFields out;
  out.translation = t;
  for (int c = 0; c < 3; ++c) {
    try {
      out.line_fields[c] = line_field_3d(lines.clusters[c], t, grid, c);
    } catch (const EmptyInput&) {
      out.line_fields[c] = sentinel_field(FieldKind::line, c, grid.size());
    }
  }
  for (int p = 0; p < 3; ++p) {
    try {
      out.point_fields[p] = point_field_3d(points[p], t, grid, gamma, p);
    } catch (const EmptyInput&) {
      out.point_fields[p] = sentinel_field(FieldKind::point, p, grid.size());
    }
  }
  return out;
}

Rotation canonicalization_rotation(const DirectionTriplet& d3d) {
  const DirectionTriplet axes(UnitVector(Vec3::UnitX()), UnitVector(Vec3::UnitY()),
                              UnitVector(Vec3::UnitZ()));
  const auto pool = generate_rotation_pool(axes, d3d, 181.0);
  double best = pool[0].residual_deg;
  for (const auto& cand : pool) best = std::min(best, cand.residual_deg);
  // Orthogonal triplets tie across many signed permutations at residual ~0;
  // take the first within tolerance so the identity association wins and
  // already-canonical maps stay put. 1e-4 deg sits above the acos noise floor.
  for (const auto& cand : pool) {
    if (cand.residual_deg <= best + 1e-4) return cand.rotation;
  }
  return pool[0].rotation;
}

LineClusters3D rotate_clusters(const LineClusters3D& in, const Rotation& r) {
  LineClusters3D out;
  for (int c = 0; c < 3; ++c) {
    out.clusters[c].reserve(in.clusters[c].size());
    for (const auto& seg : in.clusters[c]) {
      out.clusters[c].emplace_back(r * seg.start(), r * seg.end());
    }
  }
  return out;
}

IntersectionClusters3D rotate_intersections(const IntersectionClusters3D& in,
                                            const Rotation& r) {
  IntersectionClusters3D out;
  for (int p = 0; p < 3; ++p) {
    out.groups[p] = in.groups[p];
    for (auto& point : out.groups[p]) point.position = r * point.position;
  }
  return out;
}

std::array<std::vector<Vec3>, 3> group_positions(const IntersectionClusters3D& inter) {
  std::array<std::vector<Vec3>, 3> out;
  for (int p = 0; p < 3; ++p) {
    out[p].reserve(inter.groups[p].size());
    for (const auto& point : inter.groups[p]) out[p].push_back(point.position);
  }
  return out;
}

Aabb clusters_bounding_box(const LineClusters3D& clusters) {
  std::vector<Segment3D> all;
  for (const auto& c : clusters.clusters) all.insert(all.end(), c.begin(), c.end());
  return bounding_box(all);
}

}  // namespace

CanonicalMap canonicalize_map(const LineClusters3D& clusters,
                              const IntersectionClusters3D& intersections,
                              const DirectionTriplet& d3d,
                              const std::vector<Vec3>& translations, const QueryGrid& grid,
                              double gamma, double tau, std::uint64_t map_id) {
  CanonicalMap map{.lines = {},
                   .intersections = {},
                   .directions = d3d,
                   .canonical_rotation = canonicalization_rotation(d3d),
                   .translations = {},
                   .cache = {},
                   .grid = grid};
  const Aabb box = clusters_bounding_box(clusters);
  for (const auto& t : translations) {
    if (!box.contains(t, 1.0)) {
      throw ConfigError("canonicalize_map: translation outside map bounds + 1m");
    }
  }

  const Rotation& rc = map.canonical_rotation;
  map.lines = rotate_clusters(clusters, rc);
  map.intersections = rotate_intersections(intersections, rc);
  map.directions = DirectionTriplet(rc * d3d[0], rc * d3d[1], rc * d3d[2]);
  map.translations.reserve(translations.size());
  for (const auto& t : translations) map.translations.push_back(rc * t);

  map.cache.version = FieldCache::kFormatVersion;
  map.cache.grid_level = grid.level();
  map.cache.grid_points = static_cast<std::uint32_t>(grid.size());
  map.cache.gamma = gamma;
  map.cache.tau = tau;
  map.cache.map_id = map_id;
  map.cache.entries.resize(map.translations.size());

  const auto points = group_positions(map.intersections);
  parallel_for(map.translations.size(), [&](std::size_t i) {
    map.cache.entries[i] =
        build_translation_fields(map.lines, points, map.translations[i], grid, gamma);
  });
  return map;
}

CanonicalMap assemble_canonical_map(const LineClusters3D& clusters,
                                    const IntersectionClusters3D& intersections,
                                    const DirectionTriplet& d3d, const QueryGrid& grid,
                                    FieldCache cache) {
  if (cache.grid_points != grid.size() || cache.grid_level != grid.level()) {
    throw GridMismatch("assemble_canonical_map: cache grid differs from query grid");
  }
  CanonicalMap map{.lines = {},
                   .intersections = {},
                   .directions = d3d,
                   .canonical_rotation = canonicalization_rotation(d3d),
                   .translations = {},
                   .cache = std::move(cache),
                   .grid = grid};
  const Rotation& rc = map.canonical_rotation;
  map.lines = rotate_clusters(clusters, rc);
  map.intersections = rotate_intersections(intersections, rc);
  map.directions = DirectionTriplet(rc * d3d[0], rc * d3d[1], rc * d3d[2]);
  map.translations.reserve(map.cache.entries.size());
  for (const auto& entry : map.cache.entries) map.translations.push_back(entry.translation);
  return map;
}

namespace {

struct Query2DFields {
  std::array<DistanceField, 3> line_fields;
  std::array<std::optional<DistanceField>, 3> point_fields;
};

Query2DFields build_query_fields(const QueryFeatures& query, const QueryGrid& grid,
                                 double gamma) {
  Query2DFields out;
  for (int c = 0; c < 3; ++c) {
    out.line_fields[c] = line_field_2d(query.clusters.clusters[c], grid, c);
  }
  for (int p = 0; p < 3; ++p) {
    const auto& group = query.intersections.groups[p];
    if (group.empty()) continue;  // pair contributes no cost term
    std::vector<UnitVector> positions;
    positions.reserve(group.size());
    for (const auto& point : group) positions.push_back(point.position);
    out.point_fields[p] = point_field_2d(positions, grid, gamma, p);
  }
  return out;
}

std::vector<PoseCandidate> rank_candidates(const std::vector<RotationCandidate>& rotations,
                                           const CanonicalMap& map,
                                           const std::vector<long>& costs, int top_k) {
  const std::size_t n_trans = map.translations.size();
  struct Key {
    long cost;
    int t, r;
  };
  std::vector<Key> keys;
  keys.reserve(rotations.size() * n_trans);
  for (std::size_t r = 0; r < rotations.size(); ++r) {
    for (std::size_t t = 0; t < n_trans; ++t) {
      keys.push_back({costs[r * n_trans + t], int(t), int(r)});
    }
  }
  const auto better = [](const Key& a, const Key& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    if (a.t != b.t) return a.t < b.t;
    return a.r < b.r;
  };
  const std::size_t k = std::min<std::size_t>(top_k, keys.size());
  std::partial_sort(keys.begin(), keys.begin() + k, keys.end(), better);
  keys.resize(k);

  const Rotation rc_inv = map.canonical_rotation.inverse();
  std::vector<PoseCandidate> out;
  out.reserve(keys.size());
  for (const auto& key : keys) {
    PoseCandidate cand;
    cand.cost = key.cost;
    cand.translation_index = key.t;
    cand.rotation_index = key.r;
    cand.sigma = rotations[key.r].sigma;
    cand.pose.rotation = rotations[key.r].rotation * map.canonical_rotation;
    cand.pose.translation = rc_inv * map.translations[key.t];
    out.push_back(cand);
  }
  return out;
}

}  // namespace

std::vector<PoseCandidate> search_poses(const QueryFeatures& query, const CanonicalMap& map,
                                        const SearchParams& params) {
  if (map.cache.entries.empty()) throw EmptyPool("search_poses: empty translation pool");
  if (map.cache.grid_points != map.grid.size()) {
    throw GridMismatch("search_poses: cache grid differs from map grid");
  }
  const auto rotations = generate_rotation_pool(query.directions, map.directions,
                                                params.max_rotation_residual_deg);
  const Query2DFields fields = build_query_fields(query, map.grid, map.cache.gamma);

  const std::size_t n_trans = map.translations.size();
  std::vector<long> costs(rotations.size() * n_trans, 0);

  parallel_for(rotations.size(), [&](std::size_t r) {
    const RotationNNMap nn = build_rotation_nn_map(rotations[r].rotation, map.grid);
    std::array<DistanceField, 3> line_rot;
    std::array<std::optional<DistanceField>, 3> point_rot;
    for (int c = 0; c < 3; ++c) line_rot[c] = rotate_field(fields.line_fields[c], nn);
    for (int p = 0; p < 3; ++p) {
      if (fields.point_fields[p]) point_rot[p] = rotate_field(*fields.point_fields[p], nn);
    }
    const SigmaPermutation& sigma = rotations[r].sigma;
    for (std::size_t t = 0; t < n_trans; ++t) {
      const TranslationFields& cached = map.cache.entries[t];
      long cost = 0;
      for (int c = 0; c < 3; ++c) {
        cost += field_cost(line_rot[c], cached.line_fields[sigma.map[c]], params.tau);
      }
      for (int p = 0; p < 3; ++p) {
        if (!point_rot[p]) continue;
        cost += field_cost(*point_rot[p], cached.point_fields[sigma.pair_to_3d(p)],
                           params.tau);
      }
      costs[r * n_trans + t] = cost;
    }
  });

  return rank_candidates(rotations, map, costs, params.top_k);
}

std::vector<PoseCandidate> exhaustive_search_poses(const QueryFeatures& query,
                                                   const CanonicalMap& map,
                                                   const SearchParams& params) {
  if (map.cache.entries.empty() && map.translations.empty()) {
    throw EmptyPool("exhaustive_search_poses: empty translation pool");
  }
  const auto rotations = generate_rotation_pool(query.directions, map.directions,
                                                params.max_rotation_residual_deg);
  const Query2DFields fields = build_query_fields(query, map.grid, map.cache.gamma);
  const auto points = group_positions(map.intersections);

  const std::size_t n_trans = map.translations.size();
  std::vector<long> costs(rotations.size() * n_trans, 0);

  parallel_for(n_trans, [&](std::size_t t) {
    for (std::size_t r = 0; r < rotations.size(); ++r) {
      const Pose pose{rotations[r].rotation, map.translations[t]};
      const SigmaPermutation& sigma = rotations[r].sigma;
      long cost = 0;
      for (int c = 0; c < 3; ++c) {
        const int c3 = sigma.map[c];
        std::vector<SphericalSegment> projected;
        projected.reserve(map.lines.clusters[c3].size());
        for (const auto& seg : map.lines.clusters[c3]) {
          try {
            projected.push_back(project_segment(seg, pose));
          } catch (const DegenerateProjection&) {
          } catch (const AntipodalSegment&) {
          }
        }
        if (projected.empty()) continue;
        const DistanceField f3 = line_field_2d(projected, map.grid, c3);
        cost += field_cost(fields.line_fields[c], f3, params.tau);
      }
      for (int p = 0; p < 3; ++p) {
        if (!fields.point_fields[p]) continue;
        const int p3 = sigma.pair_to_3d(p);
        std::vector<UnitVector> projected;
        projected.reserve(points[p3].size());
        for (const auto& point : points[p3]) {
          try {
            projected.push_back(project_point(point, pose));
          } catch (const DegenerateProjection&) {
          }
        }
        if (projected.empty()) continue;
        const DistanceField f3 = point_field_2d(projected, map.grid, map.cache.gamma, p3);
        cost += field_cost(*fields.point_fields[p], f3, params.tau);
      }
      costs[r * n_trans + t] = cost;
    }
  });

  return rank_candidates(rotations, map, costs, params.top_k);
}

std::vector<PoseCandidate> merge_candidate_lists(
    const std::vector<std::vector<PoseCandidate>>& per_room, int top_k) {
  struct Entry {
    int room;
    PoseCandidate cand;
  };
  std::vector<Entry> all;
  for (std::size_t room = 0; room < per_room.size(); ++room) {
    for (const auto& c : per_room[room]) all.push_back({int(room), c});
  }
  std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) {
    if (a.cand.cost != b.cand.cost) return a.cand.cost < b.cand.cost;
    if (a.room != b.room) return a.room < b.room;
    if (a.cand.translation_index != b.cand.translation_index) {
      return a.cand.translation_index < b.cand.translation_index;
    }
    return a.cand.rotation_index < b.cand.rotation_index;
  });
  if (all.size() > std::size_t(top_k)) all.resize(top_k);
  std::vector<PoseCandidate> out;
  out.reserve(all.size());
  for (const auto& e : all) out.push_back(e.cand);
  return out;
}

}  // namespace fgpl
