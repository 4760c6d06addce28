#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fgpl/distance_field.hpp"

namespace fgpl {

/// Per-translation identity-rotation fields of a canonicalized map: three
/// line fields (clusters 1..3) and three point fields (pairs 12, 23, 31).
struct TranslationFields {
  Vec3 translation = Vec3::Zero();  // canonical frame
  std::array<DistanceField, 3> line_fields;
  std::array<DistanceField, 3> point_fields;
};

/// Cached 3D distance functions over a translation pool, all sharing one
/// query grid. Serialized as the versioned "FGPL" binary container.
struct FieldCache {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::uint32_t version = kFormatVersion;
  std::int32_t grid_level = 3;
  std::uint32_t grid_points = 0;
  double gamma = 0.2;
  double tau = 0.1;
  std::uint64_t map_id = 0;
  std::vector<TranslationFields> entries;
};

void write_field_cache(const FieldCache& cache, std::ostream& out);
FieldCache read_field_cache(std::istream& in);

void save_field_cache(const FieldCache& cache, const std::string& path);
FieldCache load_field_cache(const std::string& path);

}  // namespace fgpl
