#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "tirtha/mesh/mesh.hpp"

namespace tirtha::mesh {

inline constexpr std::uint32_t kGlbMagic = 0x46546C67;      // "glTF"
inline constexpr std::uint32_t kGlbVersion = 2;
inline constexpr std::uint32_t kChunkJson = 0x4E4F534A;     // "JSON"
inline constexpr std::uint32_t kChunkBin = 0x004E4942;      // "BIN\0"

struct GlbOptions {
  /// 16-bit positions/uvs and 8-bit normals (KHR_mesh_quantization); the
  /// dequantization transform goes on the node.
  bool quantize = true;
  int jpeg_quality = 90;
};

/// Serializes one scene / node / mesh / primitive. Normals are regenerated.
/// Throws EMPTY_MESH for meshes without triangles.
std::vector<std::uint8_t> write_glb(const TriangleMesh& mesh, const GlbOptions& options = {});

struct GlbContainer {
  std::uint32_t version = 0;
  std::uint32_t declared_length = 0;
  nlohmann::json json;
  std::vector<std::uint8_t> bin;
  std::uint32_t json_chunk_length = 0;
  std::uint32_t bin_chunk_length = 0;
};

/// Splits and checks the container framing. Throws MALFORMED.
GlbContainer parse_glb(std::span<const std::uint8_t> bytes);

struct GlbMesh {
  TriangleMesh mesh;  // positions in model space (node transform applied)
  std::vector<Vec3f> normals;
  bool quantized = false;
  bool has_texture = false;
};

/// Reads the first primitive back, dequantizing through the node transform.
/// The texture's JPEG bytes are attached and decoded.
GlbMesh read_glb(std::span<const std::uint8_t> bytes);

}  // namespace tirtha::mesh
