#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tirtha/ingest/image.hpp"
#include "tirtha/kernels/kernels.hpp"

namespace tirtha::mesh {

using kernels::Vec3f;

struct Vec2f {
  float u = 0, v = 0;
};

struct Bounds {
  Vec3f min;
  Vec3f max;

  Vec3f extent() const { return {max.x - min.x, max.y - min.y, max.z - min.z}; }
  double diagonal() const;
  bool contains(const Vec3f& p) const;
};

struct TextureImage {
  ingest::Raster pixels;  // RGB
  /// Encoded JPEG for `pixels` when known, so an untouched texture is embedded verbatim.
  std::vector<std::uint8_t> jpeg;
};

/// Indexed triangle list. `uvs` is empty or parallel to `positions`.
struct TriangleMesh {
  std::vector<Vec3f> positions;
  std::vector<Vec2f> uvs;
  std::vector<std::uint32_t> indices;
  std::optional<TextureImage> texture;

  std::size_t vertex_count() const { return positions.size(); }
  std::size_t face_count() const { return indices.size() / 3; }
  bool has_uvs() const { return !uvs.empty(); }

  Bounds bounds() const;
  /// Throws INDEX_OUT_OF_RANGE / VALIDATION when the invariants are broken.
  void validate() const;
};

/// Area-weighted vertex normals, unit length; isolated vertices get +Z.
std::vector<Vec3f> vertex_normals(const TriangleMesh& mesh);

/// True when both meshes carry the same positions, uvs and indices bit for bit.
bool same_geometry(const TriangleMesh& a, const TriangleMesh& b);

}  // namespace tirtha::mesh
