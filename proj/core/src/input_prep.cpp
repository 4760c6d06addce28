#include "fgpl/input_prep.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "fgpl/query_grid.hpp"

namespace fgpl {

DirectionTriplet::DirectionTriplet(const UnitVector& d1, const UnitVector& d2,
                                   const UnitVector& d3)
    : d_{canonical_sign(d1), canonical_sign(d2), canonical_sign(d3)} {
  const double max_dot = std::cos(deg_to_rad(20.0));
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      if (std::abs(d_[i].dot(d_[j])) >= max_dot) {
        throw DegenerateConfiguration(
            "DirectionTriplet: principal directions within 20 deg of parallel");
      }
    }
  }
}

UnitVector canonical_sign(const UnitVector& v) {
  const Vec3& p = v.vec();
  int axis = 0;
  double mag = std::abs(p.x());
  if (std::abs(p.y()) > mag) {
    axis = 1;
    mag = std::abs(p.y());
  }
  if (std::abs(p.z()) > mag) axis = 2;
  return p(axis) < 0.0 ? -v : v;
}

double axis_angle_deg(const UnitVector& a, const UnitVector& b) {
  return rad_to_deg(std::acos(clamp_unit(std::abs(a.dot(b)))));
}

int pair_index_of(int a, int b) {
  // {0,1}→0, {1,2}→1, {0,2}→2
  switch (a + b) {
    case 1: return 0;
    case 3: return 1;
    case 2: return 2;
    default: throw ConfigError("pair_index_of: invalid cluster pair");
  }
}

namespace {

const QueryGrid& voting_grid(int level) {
  static const QueryGrid grid4 = QueryGrid::icosphere(4);
  static const QueryGrid grid3 = QueryGrid::icosphere(3);
  if (level == 4) return grid4;
  if (level == 3) return grid3;
  throw ConfigError("voting grid level must be 3 or 4");
}

struct Bin {
  std::vector<Vec3> candidates;  // sign-aligned to the bin representative
};

struct ScoredBin {
  int key;
  std::size_t votes;
  std::size_t density;   // candidates that fell into the bin itself
  UnitVector direction;  // mean of in-bin candidates
};

/// Top-3 selection shared by the 2D and 3D estimators: bins are ranked by
/// incident-line count (candidate density breaks ties, favoring the bin at
/// the center of a vote cloud) and greedily picked while staying
/// min_separation_deg apart as axes.
DirectionTriplet select_top_directions(std::vector<ScoredBin> scored, std::size_t n_lines,
                                       const VotingParams& params) {
  std::sort(scored.begin(), scored.end(), [](const ScoredBin& a, const ScoredBin& b) {
    if (a.votes != b.votes) return a.votes > b.votes;
    if (a.density != b.density) return a.density > b.density;
    return a.key < b.key;
  });
  const std::size_t min_votes = std::max<std::size_t>(
      params.min_vote_count,
      static_cast<std::size_t>(std::ceil(params.min_vote_fraction * double(n_lines))));

  std::vector<UnitVector> picked;
  for (const auto& s : scored) {
    if (s.votes < min_votes) break;
    bool separated = true;
    for (const auto& p : picked) {
      if (axis_angle_deg(s.direction, p) < params.min_separation_deg) {
        separated = false;
        break;
      }
    }
    if (!separated) continue;
    picked.push_back(s.direction);
    if (picked.size() == 3) break;
  }
  if (picked.size() < 3) {
    throw InsufficientStructure("fewer than 3 dominant directions found");
  }
  return DirectionTriplet(picked[0], picked[1], picked[2]);
}

void add_candidate(std::map<int, Bin>& bins, const QueryGrid& grid, const Vec3& axis) {
  const int v = grid.nearest(axis);
  const int key = std::min(v, grid.antipode(v));
  Bin& bin = bins[key];
  const Vec3& rep = grid.point(key);
  bin.candidates.push_back(axis.dot(rep) >= 0.0 ? axis : Vec3(-axis));
}

Vec3 bin_mean(const Bin& bin) {
  Vec3 sum = Vec3::Zero();
  for (const auto& c : bin.candidates) sum += c;
  return sum;
}

}  // namespace

namespace {

/// Normal reliability: a short arc pins its great circle poorly (endpoint
/// jitter tilts the plane by roughly jitter / arc length), so votes and fits
/// are weighted by arc length, saturating at 30 degrees.
double line_weight(const SphericalSegment& line) {
  return std::min(line.length() / deg_to_rad(30.0), 1.0);
}

/// Direction most orthogonal to the incident normals: smallest eigenvector of
/// the weighted scatter Σ w n nᵀ, i.e. the least-squares vanishing direction.
Vec3 fit_vanishing_direction(const std::vector<const SphericalSegment*>& incident) {
  Mat3 scatter = Mat3::Zero();
  for (const auto* line : incident) {
    scatter += line_weight(*line) * line->normal() * line->normal().transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
  return eig.eigenvectors().col(0);
}

}  // namespace

DirectionTriplet estimate_principal_directions_2d(
    const std::vector<SphericalSegment>& lines, const VotingParams& params) {
  if (lines.size() < 6) {
    throw InsufficientStructure("estimate_principal_directions_2d: need >= 6 lines");
  }
  const QueryGrid& grid = voting_grid(params.grid_level);
  std::map<int, Bin> bins;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      const Vec3 v = lines[i].normal().cross(lines[j].normal());
      const double n = v.norm();
      if (n < 1e-9) continue;  // near-identical great circles
      add_candidate(bins, grid, v / n);
    }
  }

  // A vanishing direction is scored by its incident lines: those whose great
  // circle passes within the incidence tolerance. Directions are extracted
  // greedily; each one consumes its incident lines so that spurious
  // mixed-cluster accumulations lose their support.
  const double max_off_plane = std::sin(deg_to_rad(params.incidence_tol_deg));
  const std::size_t min_votes = std::max<std::size_t>(
      params.min_vote_count,
      static_cast<std::size_t>(std::ceil(params.min_vote_fraction * double(lines.size()))));

  // A line is incident to a vanishing direction when its great circle passes
  // near it AND the direction lies beyond the segment itself; directions on
  // the segments (room corners, where many edges terminate) are not vanishing
  // points even though every incident edge's circle contains them.
  const double min_vanish_angle = 2.0 * deg_to_rad(params.incidence_tol_deg);
  std::vector<bool> consumed(lines.size(), false);
  const auto incident_lines = [&](const Vec3& dir, double tol_sin) {
    const UnitVector v = UnitVector::normalized(dir);
    const UnitVector v_neg = -v;
    std::vector<const SphericalSegment*> out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (consumed[i] || std::abs(lines[i].normal().dot(dir)) >= tol_sin) continue;
      if (segment_distance(v, lines[i]) < min_vanish_angle ||
          segment_distance(v_neg, lines[i]) < min_vanish_angle) {
        continue;
      }
      out.push_back(&lines[i]);
    }
    return out;
  };
  const auto separated_from = [&](const Vec3& dir, const std::vector<UnitVector>& picked) {
    for (const auto& p : picked) {
      if (axis_angle_deg(UnitVector::normalized(dir), p) < params.min_separation_deg) {
        return false;
      }
    }
    return true;
  };

  struct WeightedBin {
    int key;
    double votes;  // length-weighted incident lines
    std::size_t density;
    UnitVector direction;
  };

  std::vector<UnitVector> picked;
  for (int round = 0; round < 3; ++round) {
    std::vector<WeightedBin> scored;
    scored.reserve(bins.size());
    for (const auto& [key, bin] : bins) {
      const Vec3 sum = bin_mean(bin);
      if (sum.norm() < 1e-12) continue;
      const UnitVector dir = UnitVector::normalized(sum);
      if (!separated_from(dir.vec(), picked)) continue;
      double votes = 0.0;
      for (const auto* line : incident_lines(dir.vec(), max_off_plane)) {
        votes += line_weight(*line);
      }
      if (votes >= double(min_votes)) {
        scored.push_back({key, votes, bin.candidates.size(), dir});
      }
    }
    std::sort(scored.begin(), scored.end(), [](const WeightedBin& a, const WeightedBin& b) {
      if (a.votes != b.votes) return a.votes > b.votes;
      if (a.density != b.density) return a.density > b.density;
      return a.key < b.key;
    });

    bool accepted = false;
    for (const auto& s : scored) {
      // refit from the incident lines at shrinking tolerance; the tight final
      // pass keeps the fit from absorbing lines of the other clusters
      Vec3 dir = s.direction.vec();
      for (const double tol_deg : {params.incidence_tol_deg, 3.0, 2.0, 2.0, 2.0}) {
        const auto inliers = incident_lines(dir, std::sin(deg_to_rad(tol_deg)));
        if (inliers.size() < 2) break;
        const Vec3 refit = fit_vanishing_direction(inliers);
        dir = refit.dot(dir) >= 0.0 ? refit : Vec3(-refit);
      }
      if (!separated_from(dir, picked)) continue;
      picked.push_back(canonical_sign(UnitVector::normalized(dir)));
      for (std::size_t i = 0; i < lines.size(); ++i) {
        if (!consumed[i] && std::abs(lines[i].normal().dot(dir)) < max_off_plane) {
          consumed[i] = true;
        }
      }
      accepted = true;
      break;
    }
    if (!accepted) {
      throw InsufficientStructure("fewer than 3 dominant directions found");
    }
  }
  return DirectionTriplet(picked[0], picked[1], picked[2]);
}

DirectionTriplet estimate_principal_directions_3d(const std::vector<Segment3D>& lines,
                                                  const VotingParams& params) {
  if (lines.size() < 6) {
    throw InsufficientStructure("estimate_principal_directions_3d: need >= 6 lines");
  }
  const QueryGrid& grid = voting_grid(params.grid_level);
  std::map<int, Bin> bins;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    add_candidate(bins, grid, lines[i].direction());
  }
  std::vector<ScoredBin> scored;
  scored.reserve(bins.size());
  for (const auto& [key, bin] : bins) {
    const Vec3 sum = bin_mean(bin);
    if (sum.norm() < 1e-12) continue;
    // every candidate is one line, so the bin size is its incident count
    scored.push_back({key, bin.candidates.size(), bin.candidates.size(),
                      UnitVector::normalized(sum)});
  }
  return select_top_directions(std::move(scored), lines.size(), params);
}

namespace {

/// Annealed incidence refit used by the estimator and the repair path.
Vec3 refit_incident(const std::vector<SphericalSegment>& lines, Vec3 dir,
                    const VotingParams& params) {
  const double vanish_margin = 2.0 * deg_to_rad(params.incidence_tol_deg);
  for (const double tol_deg : {params.incidence_tol_deg, 3.0, 2.0, 2.0, 2.0}) {
    const double tol_sin = std::sin(deg_to_rad(tol_deg));
    const UnitVector v = UnitVector::normalized(dir);
    const UnitVector vn = -v;
    std::vector<const SphericalSegment*> inliers;
    for (const auto& line : lines) {
      if (std::abs(line.normal().dot(dir)) >= tol_sin) continue;
      if (segment_distance(v, line) < vanish_margin ||
          segment_distance(vn, line) < vanish_margin) {
        continue;
      }
      inliers.push_back(&line);
    }
    if (inliers.size() < 2) break;
    const Vec3 refit = fit_vanishing_direction(inliers);
    dir = refit.dot(dir) >= 0.0 ? refit : Vec3(-refit);
  }
  return dir;
}

}  // namespace

namespace {

double max_pattern_deviation_deg(const std::array<UnitVector, 3>& dirs) {
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      worst = std::max(worst, std::abs(axis_angle_deg(dirs[i], dirs[j]) - 90.0));
    }
  }
  return worst;
}

}  // namespace

DirectionTriplet reconcile_directions_2d(const DirectionTriplet& d2d,
                                         const DirectionTriplet& d3d,
                                         const std::vector<SphericalSegment>& lines,
                                         const VotingParams& params) {
  constexpr double kPatternTolDeg = 6.0;
  if (max_pattern_deviation_deg(d3d.axes()) > kPatternTolDeg) {
    return d2d;  // repair only covers near-orthogonal maps
  }
  if (max_pattern_deviation_deg(d2d.axes()) <= kPatternTolDeg) return d2d;

  // One direction is off-pattern. Try rebuilding each slot from the cross
  // product of the other two; replacing a good axis keeps the broken one in
  // the triplet, so only the right repair restores the pattern. A variant
  // wins only if its total incident-line support beats the raw estimate
  // (a direction a few degrees off its vanishing point loses most of its
  // incident lines, so support separates good from bad axes sharply).
  const double vote_tol = std::sin(deg_to_rad(params.incidence_tol_deg));
  const double vanish_margin = 2.0 * deg_to_rad(params.incidence_tol_deg);
  const auto support = [&](const std::array<UnitVector, 3>& dirs) {
    double total = 0.0;
    for (const auto& d : dirs) {
      const UnitVector neg = -d;
      for (const auto& line : lines) {
        if (std::abs(line.normal().dot(d.vec())) >= vote_tol) continue;
        if (segment_distance(d, line) < vanish_margin ||
            segment_distance(neg, line) < vanish_margin) {
          continue;
        }
        total += line_weight(line);
      }
    }
    return total;
  };

  double best_votes = -1.0;
  std::array<UnitVector, 3> best_dirs = d2d.axes();
  bool repaired = false;
  for (int bad = 0; bad < 3; ++bad) {
    const int a = (bad + 1) % 3;
    const int b = (bad + 2) % 3;
    const Vec3 cross = d2d[a].vec().cross(d2d[b].vec());
    if (cross.norm() < 1e-9) continue;
    const Vec3 dir = refit_incident(lines, cross.normalized(), params);
    std::array<UnitVector, 3> dirs = d2d.axes();
    dirs[bad] = canonical_sign(UnitVector::normalized(dir));
    if (max_pattern_deviation_deg(dirs) > kPatternTolDeg) continue;
    const double votes = support(dirs);
    if (votes > best_votes) {
      best_votes = votes;
      best_dirs = dirs;
      repaired = true;
    }
  }
  if (!repaired) return d2d;
  try {
    return DirectionTriplet(best_dirs[0], best_dirs[1], best_dirs[2]);
  } catch (const DegenerateConfiguration&) {
    return d2d;
  }
}

std::vector<int> cluster_labels_2d(const std::vector<SphericalSegment>& lines,
                                   const DirectionTriplet& directions,
                                   double theta_clus_rad) {
  std::vector<int> labels(lines.size(), -1);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    double best = theta_clus_rad;
    for (int k = 0; k < 3; ++k) {
      // A line parallel to d has d on its great circle, so the deviation is
      // the angle of d out of the circle's plane.
      const double dev =
          std::asin(clamp_unit(std::abs(lines[i].normal().dot(directions[k].vec()))));
      if (dev < best) {
        best = dev;
        labels[i] = k;
      }
    }
  }
  return labels;
}

std::vector<int> cluster_labels_3d(const std::vector<Segment3D>& lines,
                                   const DirectionTriplet& directions,
                                   double theta_clus_rad) {
  std::vector<int> labels(lines.size(), -1);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const Vec3 u = lines[i].direction();
    double best = theta_clus_rad;
    for (int k = 0; k < 3; ++k) {
      const double dev = std::acos(clamp_unit(std::abs(u.dot(directions[k].vec()))));
      if (dev < best) {
        best = dev;
        labels[i] = k;
      }
    }
  }
  return labels;
}

LineClusters2D cluster_lines_2d(const std::vector<SphericalSegment>& lines,
                                const DirectionTriplet& directions, double theta_clus_rad) {
  const auto labels = cluster_labels_2d(lines, directions, theta_clus_rad);
  LineClusters2D out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (labels[i] >= 0) out.clusters[labels[i]].push_back(lines[i]);
  }
  for (const auto& c : out.clusters) {
    if (c.empty()) throw EmptyCluster("cluster_lines_2d: empty direction cluster");
  }
  return out;
}

LineClusters3D cluster_lines_3d(const std::vector<Segment3D>& lines,
                                const DirectionTriplet& directions, double theta_clus_rad) {
  const auto labels = cluster_labels_3d(lines, directions, theta_clus_rad);
  LineClusters3D out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (labels[i] >= 0) out.clusters[labels[i]].push_back(lines[i]);
  }
  for (const auto& c : out.clusters) {
    if (c.empty()) throw EmptyCluster("cluster_lines_3d: empty direction cluster");
  }
  return out;
}

std::pair<std::vector<Segment3D>, std::vector<SphericalSegment>> filter_lines_by_length(
    const std::vector<Segment3D>& lines3d, const std::vector<SphericalSegment>& lines2d,
    double min_length_m) {
  std::vector<Segment3D> kept3d;
  for (const auto& seg : lines3d) {
    if (seg.length() >= min_length_m) kept3d.push_back(seg);
  }
  const double r = lines3d.empty() ? 1.0 : double(kept3d.size()) / double(lines3d.size());
  const std::size_t keep2d =
      static_cast<std::size_t>(std::ceil(r * double(lines2d.size())));

  std::vector<std::size_t> order(lines2d.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lines2d[a].length() > lines2d[b].length();
  });
  order.resize(std::min(keep2d, order.size()));
  std::sort(order.begin(), order.end());

  std::vector<SphericalSegment> kept2d;
  kept2d.reserve(order.size());
  for (std::size_t idx : order) kept2d.push_back(lines2d[idx]);
  return {std::move(kept3d), std::move(kept2d)};
}

IntersectionClusters2D extract_intersections_2d(const LineClusters2D& clusters,
                                                double delta_rad) {
  IntersectionClusters2D out;
  for (int p = 0; p < 3; ++p) {
    const int ci = kClusterPairs[p][0];
    const int cj = kClusterPairs[p][1];
    const auto& a_lines = clusters.clusters[ci];
    const auto& b_lines = clusters.clusters[cj];
    for (std::size_t a = 0; a < a_lines.size(); ++a) {
      for (std::size_t b = 0; b < b_lines.size(); ++b) {
        const Vec3 v = a_lines[a].normal().cross(b_lines[b].normal());
        const double n = v.norm();
        if (n < 1e-12) continue;
        std::vector<UnitVector> kept;
        const std::array<Vec3, 2> candidates = {Vec3(v / n), Vec3(-v / n)};
        for (const Vec3& cand : candidates) {
          const UnitVector x = UnitVector::normalized(cand);
          if (segment_distance(x, a_lines[a]) <= delta_rad &&
              segment_distance(x, b_lines[b]) <= delta_rad) {
            kept.push_back(x);
          }
        }
        // Antipodal duplicates from the same pair collapse only when the two
        // candidates coincide numerically.
        if (kept.size() == 2 && spherical_distance(kept[0], kept[1]) < 1e-4) {
          kept.pop_back();
        }
        const double min_len = std::min(a_lines[a].length(), b_lines[b].length());
        const double weight = n * std::min(1.0, min_len / deg_to_rad(20.0));
        for (const auto& x : kept) {
          out.groups[p].push_back({x, p, {int(a), int(b)}, weight});
        }
      }
    }
  }
  return out;
}

double point_segment_distance_3d(const Vec3& p, const Segment3D& seg) {
  const Vec3 d = seg.end() - seg.start();
  const double len2 = d.squaredNorm();
  double t = (p - seg.start()).dot(d) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (seg.start() + t * d)).norm();
}

IntersectionClusters3D extract_intersections_3d(const LineClusters3D& clusters,
                                                double delta_m) {
  IntersectionClusters3D out;
  for (int p = 0; p < 3; ++p) {
    const int ci = kClusterPairs[p][0];
    const int cj = kClusterPairs[p][1];
    const auto& a_lines = clusters.clusters[ci];
    const auto& b_lines = clusters.clusters[cj];
    for (std::size_t a = 0; a < a_lines.size(); ++a) {
      const Vec3 p1 = a_lines[a].start();
      const Vec3 u1 = a_lines[a].direction();
      for (std::size_t b = 0; b < b_lines.size(); ++b) {
        const Vec3 p2 = b_lines[b].start();
        const Vec3 u2 = b_lines[b].direction();
        const double d = u1.dot(u2);
        const double denom = 1.0 - d * d;
        if (denom < 1e-12) continue;  // parallel lines never meet
        const Vec3 w = p1 - p2;
        const double aw = u1.dot(w);
        const double bw = u2.dot(w);
        const double s = (d * bw - aw) / denom;
        const double r = (bw - d * aw) / denom;
        const Vec3 m = 0.5 * ((p1 + s * u1) + (p2 + r * u2));
        if (point_segment_distance_3d(m, a_lines[a]) <= delta_m &&
            point_segment_distance_3d(m, b_lines[b]) <= delta_m) {
          out.groups[p].push_back({m, p, {int(a), int(b)}});
        }
      }
    }
  }
  return out;
}

}  // namespace fgpl
