#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "fgpl/field_cache.hpp"
#include "fgpl/input_prep.hpp"

namespace fgpl {

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extents() const { return max - min; }
  bool contains(const Vec3& p, double margin = 0.0) const {
    return (p.array() >= min.array() - margin).all() &&
           (p.array() <= max.array() + margin).all();
  }
};

Aabb bounding_box(const std::vector<Segment3D>& lines);

/// Signed permutation σ associating 2D principal directions with 3D ones:
/// 2D direction i pairs with sign[i]·d3d[map[i]].
struct SigmaPermutation {
  std::array<int, 3> map{0, 1, 2};
  std::array<int, 3> sign{1, 1, 1};

  /// 3D pair index matching a 2D cluster-pair index under σ.
  int pair_to_3d(int pair_idx) const {
    return pair_index_of(map[kClusterPairs[pair_idx][0]], map[kClusterPairs[pair_idx][1]]);
  }
};

struct RotationCandidate {
  Rotation rotation;
  SigmaPermutation sigma;
  double residual_deg = 0.0;
};

/// Grid-partition translation pool: per-axis counts proportional to the box
/// extents with product ≥ count, trimmed to exactly `count` centers closest
/// to the box center. Deterministic order.
std::vector<Vec3> generate_translation_pool(const Aabb& box, int count);

/// The ≤ 2³·3! = 48 signed-permutation associations between 2D and 3D
/// principal directions, one Kabsch rotation each. Candidates whose residual
/// exceeds max_residual_deg are dropped, except the minimum-residual one,
/// which is always kept.
std::vector<RotationCandidate> generate_rotation_pool(const DirectionTriplet& d2d,
                                                      const DirectionTriplet& d3d,
                                                      double max_residual_deg = 5.0);

/// A 3D line map rotated so its principal directions align with the world
/// axes, with identity-rotation distance fields cached per translation.
struct CanonicalMap {
  LineClusters3D lines;
  IntersectionClusters3D intersections;
  DirectionTriplet directions;   // canonicalized principal directions
  Rotation canonical_rotation;   // original → canonical (p_c = R_c · p)
  std::vector<Vec3> translations;  // canonical frame
  FieldCache cache;
  QueryGrid grid;
};

/// Rotates map features into the canonical frame and builds the field cache
/// over the given translation pool (original frame; rotated internally).
/// Cache building parallelizes over translations.
CanonicalMap canonicalize_map(const LineClusters3D& clusters,
                              const IntersectionClusters3D& intersections,
                              const DirectionTriplet& d3d,
                              const std::vector<Vec3>& translations, const QueryGrid& grid,
                              double gamma, double tau, std::uint64_t map_id = 0);

/// Same canonicalization, but adopts an already-built cache (for caches
/// loaded from disk). Translations are taken from the cache entries.
CanonicalMap assemble_canonical_map(const LineClusters3D& clusters,
                                    const IntersectionClusters3D& intersections,
                                    const DirectionTriplet& d3d, const QueryGrid& grid,
                                    FieldCache cache);

/// Prepared 2D query features.
struct QueryFeatures {
  LineClusters2D clusters;
  IntersectionClusters2D intersections;
  DirectionTriplet directions;
};

struct SearchParams {
  int top_k = 5;
  double tau = 0.1;
  double max_rotation_residual_deg = 5.0;
};

struct PoseCandidate {
  Pose pose;  // original map frame
  SigmaPermutation sigma;
  long cost = 0;
  int translation_index = 0;
  int rotation_index = 0;
};

/// Cached pose search (the decoupled cost): 2D fields are computed once at
/// identity, resampled per rotation through nearest-neighbor maps, and
/// compared against the cached 3D fields for every translation. Returns the
/// top-K candidates by cost with ties broken by (translation, rotation)
/// index; poses are mapped back to the original frame. Performs no 3D
/// projections at query time.
std::vector<PoseCandidate> search_poses(const QueryFeatures& query, const CanonicalMap& map,
                                        const SearchParams& params = {});

/// Reference search evaluating the original cost directly: 3D fields are
/// projected on the fly at every candidate pose. Same ranking semantics as
/// search_poses; used by the bench command and as an accuracy oracle.
std::vector<PoseCandidate> exhaustive_search_poses(const QueryFeatures& query,
                                                   const CanonicalMap& map,
                                                   const SearchParams& params = {});

/// Merges per-room candidate lists into one top-K ranking (cost, then room,
/// then translation and rotation index).
std::vector<PoseCandidate> merge_candidate_lists(
    const std::vector<std::vector<PoseCandidate>>& per_room, int top_k);

}  // namespace fgpl
