#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "tirtha/mesh/mesh.hpp"

namespace tirtha::mesh {

struct ObjDocument {
  TriangleMesh mesh;
  std::optional<std::string> mtllib;    // as written in the file
  std::optional<std::string> material;  // first usemtl
};

/// Parses Wavefront OBJ text: v, vt, f (v, v/vt, v/vt/vn, v//vn; negative
/// indices allowed), polygons fan-triangulated. Normals and unknown
/// statements are ignored. Throws MALFORMED_LINE (message carries the line
/// number) or INDEX_OUT_OF_RANGE.
///
/// Vertex i of the result is OBJ vertex i+1 paired with the first texture
/// coordinate it is used with; further distinct (v, vt) pairs are appended.
ObjDocument parse_obj(std::string_view text);

/// Returns the map_Kd file named for `material` (or the first one when unset).
std::optional<std::string> diffuse_map(std::string_view mtl_text, const std::optional<std::string>& material);

/// Reads an OBJ file and resolves its diffuse texture through mtllib.
TriangleMesh load_obj(const std::filesystem::path& path);

struct ObjFiles {
  std::string obj;
  std::string mtl;                 // empty without texture
  std::vector<std::uint8_t> jpeg;  // encoded texture, empty without texture
};

/// Serializes a mesh as OBJ (+ MTL + JPEG names derived from `stem`).
ObjFiles write_obj(const TriangleMesh& mesh, std::string_view stem, int jpeg_quality = 92);
/// Writes stem.obj (and stem.mtl, stem.jpg) into `dir`; returns the OBJ path.
std::filesystem::path save_obj(const TriangleMesh& mesh, const std::filesystem::path& dir, std::string_view stem);

}  // namespace tirtha::mesh
