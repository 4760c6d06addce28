#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "fgpl/input_prep.hpp"
#include "fgpl/pose_search.hpp"

namespace fgpl {

enum class MatchOrigin { cluster_guided, close_projection };

/// A 2D-3D intersection correspondence. 3D data is in the original map frame.
struct PointMatch {
  IntersectionPoint2D m2d;
  IntersectionPoint3D m3d;
  int index_2d = 0;  // positions within their pair groups
  int index_3d = 0;
  MatchOrigin origin = MatchOrigin::cluster_guided;
};

/// A 2D-3D line correspondence derived from a cluster-guided point match.
struct LineMatch {
  SphericalSegment l2d;
  Segment3D l3d;
  std::array<int, 2> key2d{};  // (cluster, index) for dedup
  std::array<int, 2> key3d{};
  double weight = 1.0;  // arc-length reliability of the 2D normal
};

/// Mutual nearest neighbors between each 2D intersection cluster pair and the
/// projection of its σ-mapped 3D counterpart, per pair independently. Pairs
/// farther apart than max_distance_rad are not accepted.
std::vector<PointMatch> cluster_guided_matches(
    const IntersectionClusters2D& p2d, const IntersectionClusters3D& p3d,
    const Pose& pose, const SigmaPermutation& sigma,
    double max_distance_rad = std::numeric_limits<double>::infinity());

/// All cross pairs with projected spherical distance strictly below
/// delta_match, ignoring cluster labels. Pairs already present in `existing`
/// keep their cluster_guided origin and are not duplicated.
std::vector<PointMatch> close_projection_matches(const IntersectionClusters2D& p2d,
                                                 const IntersectionClusters3D& p3d,
                                                 const Pose& pose, double delta_match,
                                                 const std::vector<PointMatch>& existing = {});

struct RefineOptions {
  int steps = 100;
  double step_size = 0.1;
  int patience = 10;  // non-improving iterates before halving the step
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double delta_match = 0.1;
  std::size_t min_point_matches = 3;
  std::size_t min_line_matches = 2;
  /// ICP correspondence cap: mutual-NN pairs farther apart than this are
  /// dropped during matching and per-step match updates. Also keeps the
  /// descent from locking onto a neighboring corner of a repetitive layout.
  double max_match_distance = 0.15;
  /// Candidates are selected by refined score within this relative window of
  /// the best search cost; the global field cost separates flipped poses in
  /// symmetric rooms far more reliably than local residuals.
  double search_cost_window = 0.1;
};

/// L1 alignment cost between matched 2D intersections and projected 3D ones.
double translation_cost(const std::vector<PointMatch>& matches, const Pose& pose);
/// Analytic gradient of translation_cost w.r.t. the translation.
Vec3 translation_cost_gradient(const std::vector<PointMatch>& matches, const Pose& pose);

/// Σ|cos| between 2D great-circle normals and rotated 3D line directions;
/// zero when every 3D direction lies in its matched line's plane.
double rotation_cost(const std::vector<LineMatch>& matches, const Rotation& rotation);
/// Analytic gradient w.r.t. a left axis-angle increment at the current rotation.
Vec3 rotation_cost_gradient(const std::vector<LineMatch>& matches, const Rotation& rotation);

struct TranslationRefineResult {
  Vec3 translation = Vec3::Zero();
  std::vector<PointMatch> matches;  // match set of the returned iterate
  std::vector<double> cost_history;
};

/// Adam descent on the translation with per-step cluster-guided match
/// updates; returns the iterate with the smallest recorded cost. The rotation
/// is held fixed. Throws TooFewMatches when fewer than min_point_matches
/// matches are given.
TranslationRefineResult refine_translation(const std::vector<PointMatch>& initial_matches,
                                           const Pose& pose,
                                           const IntersectionClusters2D& p2d,
                                           const IntersectionClusters3D& p3d,
                                           const SigmaPermutation& sigma,
                                           const RefineOptions& opts = {});

/// Two line matches per cluster-guided point match (one per parent cluster),
/// deduplicated by line identity. Close-projection matches are ignored.
std::vector<LineMatch> derive_line_matches(const std::vector<PointMatch>& matches,
                                           const SigmaPermutation& sigma,
                                           const LineClusters2D& lines2d,
                                           const LineClusters3D& lines3d);

struct RotationRefineResult {
  Rotation rotation;
  std::vector<double> cost_history;
};

/// Adam descent on SO(3) via exponential-map increments, matches held fixed,
/// re-orthonormalized each step; returns the best-cost iterate. With fewer
/// than min_line_matches usable matches the input rotation is returned
/// unchanged.
RotationRefineResult refine_rotation(const std::vector<LineMatch>& matches,
                                     const Rotation& initial,
                                     const RefineOptions& opts = {});

struct RefinementResult {
  Pose pose;
  std::vector<double> trans_cost_history;
  std::vector<double> rot_cost_history;
  int match_count = 0;
  double score = 0.0;  // final L1 cost normalized by match count
  bool demoted = false;
  int candidate_index = 0;
  long search_cost = 0;
};

/// Full per-candidate refinement: match, refine translation, derive line
/// matches, refine rotation, re-score. Returns nullopt when the candidate has
/// too few matches to refine.
std::optional<RefinementResult> refine_candidate(const PoseCandidate& candidate,
                                                 int candidate_index,
                                                 const IntersectionClusters2D& p2d,
                                                 const IntersectionClusters3D& p3d,
                                                 const LineClusters2D& lines2d,
                                                 const LineClusters3D& lines3d,
                                                 const RefineOptions& opts = {});

/// Refines every candidate (independently, in parallel) and returns the best
/// by (not demoted, score, candidate order). Throws AllCandidatesFailed when
/// every candidate fails to match.
RefinementResult refine_best(const std::vector<PoseCandidate>& candidates,
                             const IntersectionClusters2D& p2d,
                             const IntersectionClusters3D& p3d,
                             const LineClusters2D& lines2d, const LineClusters3D& lines3d,
                             const RefineOptions& opts = {});

}  // namespace fgpl
