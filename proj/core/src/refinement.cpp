#include "fgpl/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "fgpl/parallel.hpp"

namespace fgpl {

namespace {

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

struct ProjectedGroup {
  std::vector<Vec3> dirs;     // unit rays, aligned with kept[]
  std::vector<int> indices;   // original indices (projection may drop points)
};

ProjectedGroup project_group(const std::vector<IntersectionPoint3D>& group, const Pose& pose) {
  ProjectedGroup out;
  out.dirs.reserve(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    try {
      out.dirs.push_back(project_point(group[i].position, pose).vec());
      out.indices.push_back(int(i));
    } catch (const DegenerateProjection&) {
    }
  }
  return out;
}

}  // namespace

std::vector<PointMatch> cluster_guided_matches(const IntersectionClusters2D& p2d,
                                               const IntersectionClusters3D& p3d,
                                               const Pose& pose,
                                               const SigmaPermutation& sigma,
                                               double max_distance_rad) {
  const double min_dot = std::cos(std::min(max_distance_rad, M_PI));
  std::vector<PointMatch> out;
  for (int p = 0; p < 3; ++p) {
    const auto& group2d = p2d.groups[p];
    const auto& group3d = p3d.groups[sigma.pair_to_3d(p)];
    if (group2d.empty() || group3d.empty()) continue;
    const ProjectedGroup proj = project_group(group3d, pose);
    if (proj.dirs.empty()) continue;

    // nearest projected 3D point for each 2D point, and vice versa
    std::vector<int> nn_of_2d(group2d.size(), -1);
    for (std::size_t a = 0; a < group2d.size(); ++a) {
      double best = -2.0;
      for (std::size_t b = 0; b < proj.dirs.size(); ++b) {
        const double d = group2d[a].position.vec().dot(proj.dirs[b]);
        if (d > best) {
          best = d;
          nn_of_2d[a] = int(b);
        }
      }
      if (best < min_dot) nn_of_2d[a] = -1;
    }
    std::vector<int> nn_of_3d(proj.dirs.size(), -1);
    for (std::size_t b = 0; b < proj.dirs.size(); ++b) {
      double best = -2.0;
      for (std::size_t a = 0; a < group2d.size(); ++a) {
        const double d = group2d[a].position.vec().dot(proj.dirs[b]);
        if (d > best) {
          best = d;
          nn_of_3d[b] = int(a);
        }
      }
    }
    for (std::size_t a = 0; a < group2d.size(); ++a) {
      const int b = nn_of_2d[a];
      if (b >= 0 && nn_of_3d[b] == int(a)) {
        const int idx3 = proj.indices[b];
        out.push_back({group2d[a], group3d[idx3], int(a), idx3,
                       MatchOrigin::cluster_guided});
      }
    }
  }
  return out;
}

std::vector<PointMatch> close_projection_matches(const IntersectionClusters2D& p2d,
                                                 const IntersectionClusters3D& p3d,
                                                 const Pose& pose, double delta_match,
                                                 const std::vector<PointMatch>& existing) {
  std::set<std::array<int, 4>> seen;
  for (const auto& m : existing) {
    seen.insert({m.m2d.pair_index, m.index_2d, m.m3d.pair_index, m.index_3d});
  }
  std::vector<PointMatch> out;
  for (int p3 = 0; p3 < 3; ++p3) {
    const ProjectedGroup proj = project_group(p3d.groups[p3], pose);
    for (std::size_t b = 0; b < proj.dirs.size(); ++b) {
      const UnitVector ray = UnitVector::normalized(proj.dirs[b]);
      for (int p2 = 0; p2 < 3; ++p2) {
        const auto& group2d = p2d.groups[p2];
        for (std::size_t a = 0; a < group2d.size(); ++a) {
          if (spherical_distance(group2d[a].position, ray) >= delta_match) continue;
          const int idx3 = proj.indices[b];
          if (seen.count({p2, int(a), p3, idx3})) continue;
          out.push_back({group2d[a], p3d.groups[p3][idx3], int(a), idx3,
                         MatchOrigin::close_projection});
        }
      }
    }
  }
  return out;
}

double translation_cost(const std::vector<PointMatch>& matches, const Pose& pose) {
  double cost = 0.0;
  const Mat3& r = pose.rotation.matrix();
  for (const auto& m : matches) {
    const Vec3 v = r * (m.m3d.position - pose.translation);
    const double n = v.norm();
    if (n <= kProjectionEps) continue;
    cost += m.m2d.weight * (m.m2d.position.vec() - v / n).lpNorm<1>();
  }
  return cost;
}

Vec3 translation_cost_gradient(const std::vector<PointMatch>& matches, const Pose& pose) {
  Vec3 grad = Vec3::Zero();
  const Mat3& r = pose.rotation.matrix();
  for (const auto& m : matches) {
    const Vec3 v = r * (m.m3d.position - pose.translation);
    const double n = v.norm();
    if (n <= kProjectionEps) continue;
    const Vec3 u = v / n;
    const Vec3 res = m.m2d.position.vec() - u;
    const Vec3 s(sign_of(res.x()), sign_of(res.y()), sign_of(res.z()));
    grad += m.m2d.weight * (r.transpose() * (s - u * u.dot(s)) / n);
  }
  return grad;
}

double rotation_cost(const std::vector<LineMatch>& matches, const Rotation& rotation) {
  double cost = 0.0;
  for (const auto& m : matches) {
    cost += m.weight * std::abs(m.l2d.normal().dot(rotation * m.l3d.direction()));
  }
  return cost;
}

Vec3 rotation_cost_gradient(const std::vector<LineMatch>& matches, const Rotation& rotation) {
  Vec3 grad = Vec3::Zero();
  for (const auto& m : matches) {
    const Vec3 ru = rotation * m.l3d.direction();
    const double c = m.l2d.normal().dot(ru);
    grad += m.weight * sign_of(c) * ru.cross(m.l2d.normal());
  }
  return grad;
}

namespace {

struct Adam {
  Vec3 m = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  int t = 0;

  void reset() { *this = Adam{}; }

  Vec3 step(const Vec3& g, const RefineOptions& o, double lr) {
    ++t;
    m = o.beta1 * m + (1.0 - o.beta1) * g;
    v = o.beta2 * v + (1.0 - o.beta2) * g.cwiseProduct(g);
    const Vec3 m_hat = m / (1.0 - std::pow(o.beta1, t));
    const Vec3 v_hat = v / (1.0 - std::pow(o.beta2, t));
    return -lr * (m_hat.array() / (v_hat.array().sqrt() + o.adam_eps)).matrix();
  }
};

}  // namespace

TranslationRefineResult refine_translation(const std::vector<PointMatch>& initial_matches,
                                           const Pose& pose,
                                           const IntersectionClusters2D& p2d,
                                           const IntersectionClusters3D& p3d,
                                           const SigmaPermutation& sigma,
                                           const RefineOptions& opts) {
  if (initial_matches.size() < opts.min_point_matches) {
    throw TooFewMatches("refine_translation: fewer than 3 point matches");
  }
  TranslationRefineResult result;
  std::vector<PointMatch> matches = initial_matches;
  Vec3 t = pose.translation;
  double lr = opts.step_size;
  Adam adam;
  double best_cost = std::numeric_limits<double>::infinity();
  Vec3 best_t = t;
  std::vector<PointMatch> best_matches = matches;
  int fail_streak = 0;

  for (int n = 0; n <= opts.steps; ++n) {
    const Pose cur{pose.rotation, t};
    const double cost = translation_cost(matches, cur);
    result.cost_history.push_back(cost);
    if (cost < best_cost) {
      best_cost = cost;
      best_t = t;
      best_matches = matches;
      fail_streak = 0;
    } else if (++fail_streak >= opts.patience) {
      // monotone fallback: halve the step and restart from the best iterate
      lr *= 0.5;
      t = best_t;
      matches = best_matches;
      adam.reset();
      fail_streak = 0;
    }
    if (n == opts.steps) break;

    t += adam.step(translation_cost_gradient(matches, {pose.rotation, t}), opts, lr);
    auto updated = cluster_guided_matches(p2d, p3d, {pose.rotation, t}, sigma,
                                          opts.max_match_distance);
    if (updated.size() >= opts.min_point_matches) matches = std::move(updated);
  }

  result.translation = best_t;
  result.matches = std::move(best_matches);
  return result;
}

Vec3 polish_translation(const std::vector<PointMatch>& matches, const Pose& pose,
                        const RefineOptions& opts) {
  // short fixed-correspondence descent on the tight inliers; mismatched
  // neighbors inside the ICP cap stop steering the tail of the estimate
  std::vector<PointMatch> tight;
  for (const auto& m : matches) {
    try {
      const UnitVector proj = project_point(m.m3d.position, pose);
      if (spherical_distance(m.m2d.position, proj) < 0.5 * opts.max_match_distance) {
        tight.push_back(m);
      }
    } catch (const DegenerateProjection&) {
    }
  }
  if (tight.size() < opts.min_point_matches) return pose.translation;

  Vec3 t = pose.translation;
  double lr = 0.125 * opts.step_size;
  Adam adam;
  double best_cost = translation_cost(tight, pose);
  Vec3 best_t = pose.translation;
  int fail_streak = 0;
  for (int n = 0; n < opts.steps / 2; ++n) {
    t += adam.step(translation_cost_gradient(tight, {pose.rotation, t}), opts, lr);
    const double cost = translation_cost(tight, {pose.rotation, t});
    if (cost < best_cost) {
      best_cost = cost;
      best_t = t;
      fail_streak = 0;
    } else if (++fail_streak >= opts.patience) {
      lr *= 0.5;
      t = best_t;
      adam.reset();
      fail_streak = 0;
    }
  }
  // a polish is a local touch-up; reject runaway solutions
  return (best_t - pose.translation).norm() < 0.15 ? best_t : pose.translation;
}

std::vector<LineMatch> derive_line_matches(const std::vector<PointMatch>& matches,
                                           const SigmaPermutation& sigma,
                                           const LineClusters2D& lines2d,
                                           const LineClusters3D& lines3d) {
  std::vector<LineMatch> out;
  std::set<std::array<int, 4>> seen;
  for (const auto& m : matches) {
    if (m.origin != MatchOrigin::cluster_guided) continue;
    const auto& pair2d = kClusterPairs[m.m2d.pair_index];
    const auto& pair3d = kClusterPairs[m.m3d.pair_index];
    for (int slot = 0; slot < 2; ++slot) {
      const int c2 = pair2d[slot];
      const int c3 = sigma.map[c2];
      // the 3D parent slot holding cluster σ(c2)
      const int slot3 = pair3d[0] == c3 ? 0 : 1;
      const int l2 = m.m2d.parent_lines[slot];
      const int l3 = m.m3d.parent_lines[slot3];
      if (!seen.insert({c2, l2, c3, l3}).second) continue;
      const SphericalSegment& seg2d = lines2d.clusters[c2][l2];
      const double weight = std::min(1.0, seg2d.length() / deg_to_rad(30.0));
      out.push_back({seg2d, lines3d.clusters[c3][l3], {c2, l2}, {c3, l3}, weight});
    }
  }
  return out;
}

RotationRefineResult refine_rotation(const std::vector<LineMatch>& matches,
                                     const Rotation& initial, const RefineOptions& opts) {
  RotationRefineResult result{initial, {}};
  if (matches.size() < opts.min_line_matches) return result;
  bool non_parallel = false;
  for (std::size_t i = 0; i < matches.size() && !non_parallel; ++i) {
    for (std::size_t j = i + 1; j < matches.size(); ++j) {
      if (matches[i].l3d.direction().cross(matches[j].l3d.direction()).norm() > 1e-6) {
        non_parallel = true;
        break;
      }
    }
  }
  if (!non_parallel) return result;

  Rotation r = initial;
  double lr = opts.step_size;
  Adam adam;
  double best_cost = std::numeric_limits<double>::infinity();
  Rotation best_r = r;
  int fail_streak = 0;

  for (int n = 0; n <= opts.steps; ++n) {
    const double cost = rotation_cost(matches, r);
    result.cost_history.push_back(cost);
    if (cost < best_cost) {
      best_cost = cost;
      best_r = r;
      fail_streak = 0;
    } else if (++fail_streak >= opts.patience) {
      lr *= 0.5;
      r = best_r;
      adam.reset();
      fail_streak = 0;
    }
    if (n == opts.steps) break;

    const Vec3 dw = adam.step(rotation_cost_gradient(matches, r), opts, lr);
    r = Rotation::project(Rotation::from_axis_angle(dw).matrix() * r.matrix());
  }

  result.rotation = best_r;
  return result;
}

std::optional<RefinementResult> refine_candidate(const PoseCandidate& candidate,
                                                 int candidate_index,
                                                 const IntersectionClusters2D& p2d,
                                                 const IntersectionClusters3D& p3d,
                                                 const LineClusters2D& lines2d,
                                                 const LineClusters3D& lines3d,
                                                 const RefineOptions& opts) {
  auto guided = cluster_guided_matches(p2d, p3d, candidate.pose, candidate.sigma,
                                       opts.max_match_distance);
  auto close = close_projection_matches(p2d, p3d, candidate.pose, opts.delta_match, guided);
  std::vector<PointMatch> initial = guided;
  initial.insert(initial.end(), close.begin(), close.end());
  if (initial.size() < opts.min_point_matches) return std::nullopt;

  TranslationRefineResult trans;
  try {
    trans = refine_translation(initial, candidate.pose, p2d, p3d, candidate.sigma, opts);
  } catch (const TooFewMatches&) {
    return std::nullopt;
  }

  const auto line_matches = derive_line_matches(trans.matches, candidate.sigma, lines2d, lines3d);
  const auto rot = refine_rotation(line_matches, candidate.pose.rotation, opts);

  RefinementResult result;
  result.pose = Pose{rot.rotation, trans.translation};
  result.trans_cost_history = trans.cost_history;
  result.rot_cost_history = rot.cost_history;
  result.candidate_index = candidate_index;
  result.search_cost = candidate.cost;

  // Score over the translation stage's mutual-NN match set: close-projection
  // matches are threshold-selected, so their residuals carry no signal about
  // pose quality. They are recomputed once below for the reported count.
  // Scoring happens before the polish so candidate selection compares like
  // with like.
  result.demoted = trans.matches.size() < opts.min_point_matches;
  double total_weight = 0.0;
  for (const auto& m : trans.matches) total_weight += m.m2d.weight;
  result.score = total_weight <= 0.0
                     ? std::numeric_limits<double>::infinity()
                     : translation_cost(trans.matches, result.pose) / total_weight;

  result.pose.translation = polish_translation(trans.matches, result.pose, opts);

  auto final_close =
      close_projection_matches(p2d, p3d, result.pose, opts.delta_match, trans.matches);
  result.match_count = int(trans.matches.size() + final_close.size());
  return result;
}

RefinementResult refine_best(const std::vector<PoseCandidate>& candidates,
                             const IntersectionClusters2D& p2d,
                             const IntersectionClusters3D& p3d,
                             const LineClusters2D& lines2d, const LineClusters3D& lines3d,
                             const RefineOptions& opts) {
  if (candidates.empty()) throw AllCandidatesFailed("refine_best: no candidates");
  std::vector<std::optional<RefinementResult>> results(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t i) {
    results[i] = refine_candidate(candidates[i], int(i), p2d, p3d, lines2d, lines3d, opts);
  });

  long best_search_cost = 0;
  for (const auto& r : results) {
    if (r) best_search_cost = std::min(best_search_cost, r->search_cost);
  }
  // score only competes within the search-cost window; outside it the global
  // field evidence overrules the local residual
  const long cost_floor =
      long(std::ceil(double(best_search_cost) * (1.0 - opts.search_cost_window)));

  const RefinementResult* best = nullptr;
  for (const auto& r : results) {
    if (!r) continue;
    const bool in_window = r->search_cost <= cost_floor;
    if (!best) {
      best = &*r;
      continue;
    }
    const bool best_in_window = best->search_cost <= cost_floor;
    if (in_window != best_in_window) {
      if (in_window) best = &*r;
      continue;
    }
    if (r->demoted != best->demoted) {
      if (!r->demoted) best = &*r;
      continue;
    }
    if (r->demoted) {
      if (r->search_cost < best->search_cost) best = &*r;
    } else if (r->score < best->score) {
      best = &*r;
    }
  }
  if (!best) {
    throw AllCandidatesFailed("refine_best: every candidate had too few matches");
  }
  return *best;
}

}  // namespace fgpl
