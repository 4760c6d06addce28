#include "fgpl/field_cache.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace fgpl {

// Layout (little-endian):
//   magic "FGPL" | u32 version | u32 grid_level | u32 grid_points
//   | f64 gamma | f64 tau | u64 map_id | u64 translation_count
//   then per translation:
//   f64[3] translation | 6 records of { u32 kind, u32 tag, f32[grid_points] }
//   (3 line fields then 3 point fields).

namespace {

constexpr char kMagic[4] = {'F', 'G', 'P', 'L'};

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IoError("field cache: truncated stream");
  return value;
}

void write_field(std::ostream& out, const DistanceField& field) {
  write_pod(out, static_cast<std::uint32_t>(field.kind));
  write_pod(out, static_cast<std::uint32_t>(field.cluster_tag));
  out.write(reinterpret_cast<const char*>(field.values.data()),
            static_cast<std::streamsize>(field.values.size() * sizeof(float)));
}

DistanceField read_field(std::istream& in, std::uint32_t grid_points, FieldKind expected) {
  DistanceField field;
  const auto kind = read_pod<std::uint32_t>(in);
  if (kind > 1) throw IoError("field cache: bad field kind");
  field.kind = static_cast<FieldKind>(kind);
  if (field.kind != expected) throw IoError("field cache: field records out of order");
  field.cluster_tag = static_cast<std::int32_t>(read_pod<std::uint32_t>(in));
  field.values.resize(grid_points);
  in.read(reinterpret_cast<char*>(field.values.data()),
          static_cast<std::streamsize>(grid_points * sizeof(float)));
  if (!in) throw IoError("field cache: truncated field values");
  return field;
}

}  // namespace

void write_field_cache(const FieldCache& cache, std::ostream& out) {
  out.write(kMagic, 4);
  write_pod(out, cache.version);
  write_pod(out, static_cast<std::uint32_t>(cache.grid_level));
  write_pod(out, cache.grid_points);
  write_pod(out, cache.gamma);
  write_pod(out, cache.tau);
  write_pod(out, cache.map_id);
  write_pod(out, static_cast<std::uint64_t>(cache.entries.size()));
  for (const auto& entry : cache.entries) {
    write_pod(out, entry.translation.x());
    write_pod(out, entry.translation.y());
    write_pod(out, entry.translation.z());
    for (const auto& f : entry.line_fields) write_field(out, f);
    for (const auto& f : entry.point_fields) write_field(out, f);
  }
  if (!out) throw IoError("field cache: write failed");
}

FieldCache read_field_cache(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw CacheBadMagic("field cache: bad magic");
  }
  FieldCache cache;
  cache.version = read_pod<std::uint32_t>(in);
  if (cache.version != FieldCache::kFormatVersion) {
    throw CacheBadVersion("field cache: unsupported format version");
  }
  cache.grid_level = static_cast<std::int32_t>(read_pod<std::uint32_t>(in));
  cache.grid_points = read_pod<std::uint32_t>(in);
  cache.gamma = read_pod<double>(in);
  cache.tau = read_pod<double>(in);
  cache.map_id = read_pod<std::uint64_t>(in);
  const auto count = read_pod<std::uint64_t>(in);
  cache.entries.resize(count);
  for (auto& entry : cache.entries) {
    entry.translation.x() = read_pod<double>(in);
    entry.translation.y() = read_pod<double>(in);
    entry.translation.z() = read_pod<double>(in);
    for (int i = 0; i < 3; ++i) {
      entry.line_fields[i] = read_field(in, cache.grid_points, FieldKind::line);
    }
    for (int i = 0; i < 3; ++i) {
      entry.point_fields[i] = read_field(in, cache.grid_points, FieldKind::point);
    }
  }
  in.peek();
  if (!in.eof()) throw IoError("field cache: trailing bytes after payload");
  return cache;
}

void save_field_cache(const FieldCache& cache, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("field cache: cannot open for writing: " + path);
  write_field_cache(cache, out);
}

FieldCache load_field_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("field cache: cannot open: " + path);
  return read_field_cache(in);
}

}  // namespace fgpl
