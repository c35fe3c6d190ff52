#include "tirtha/mesh/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "tirtha/common/error.hpp"

namespace tirtha::mesh {

double Bounds::diagonal() const {
  auto e = extent();
  return std::sqrt(double(e.x) * e.x + double(e.y) * e.y + double(e.z) * e.z);
}

bool Bounds::contains(const Vec3f& p) const {
  return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z && p.z <= max.z;
}

Bounds TriangleMesh::bounds() const {
  Bounds b;
  if (positions.empty()) return b;
  constexpr float inf = std::numeric_limits<float>::infinity();
  b.min = {inf, inf, inf};
  b.max = {-inf, -inf, -inf};
  for (const auto& p : positions) {
    b.min = {std::min(b.min.x, p.x), std::min(b.min.y, p.y), std::min(b.min.z, p.z)};
    b.max = {std::max(b.max.x, p.x), std::max(b.max.y, p.y), std::max(b.max.z, p.z)};
  }
  return b;
}

void TriangleMesh::validate() const {
  if (indices.size() % 3 != 0) throw Error(ErrorCode::Validation, "index count is not a multiple of 3");
  if (!uvs.empty() && uvs.size() != positions.size()) {
    throw Error(ErrorCode::Validation, "uv count does not match vertex count");
  }
  for (auto i : indices) {
    if (i >= positions.size()) {
      throw Error(ErrorCode::IndexOutOfRange, "index " + std::to_string(i) + " >= vertex count " +
                                                  std::to_string(positions.size()));
    }
  }
  for (const auto& p : positions) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw Error(ErrorCode::Validation, "non-finite vertex position");
    }
  }
}

std::vector<Vec3f> vertex_normals(const TriangleMesh& mesh) {
  std::vector<double> acc(mesh.positions.size() * 3, 0.0);
  for (std::size_t f = 0; f + 2 < mesh.indices.size(); f += 3) {
    const auto& a = mesh.positions[mesh.indices[f]];
    const auto& b = mesh.positions[mesh.indices[f + 1]];
    const auto& c = mesh.positions[mesh.indices[f + 2]];
    double ux = double(b.x) - a.x, uy = double(b.y) - a.y, uz = double(b.z) - a.z;
    double vx = double(c.x) - a.x, vy = double(c.y) - a.y, vz = double(c.z) - a.z;
    // cross product length is twice the area, which is the weighting we want
    double nx = uy * vz - uz * vy, ny = uz * vx - ux * vz, nz = ux * vy - uy * vx;
    for (int k = 0; k < 3; ++k) {
      auto v = mesh.indices[f + k];
      acc[v * 3] += nx;
      acc[v * 3 + 1] += ny;
      acc[v * 3 + 2] += nz;
    }
  }
  std::vector<Vec3f> out(mesh.positions.size());
  for (std::size_t v = 0; v < out.size(); ++v) {
    double x = acc[v * 3], y = acc[v * 3 + 1], z = acc[v * 3 + 2];
    double len = std::sqrt(x * x + y * y + z * z);
    out[v] = len > 0 ? Vec3f{float(x / len), float(y / len), float(z / len)} : Vec3f{0, 0, 1};
  }
  return out;
}

bool same_geometry(const TriangleMesh& a, const TriangleMesh& b) {
  auto same_bytes = [](const auto& x, const auto& y) {
    using T = typename std::decay_t<decltype(x)>::value_type;
    return x.size() == y.size() && (x.empty() || std::memcmp(x.data(), y.data(), x.size() * sizeof(T)) == 0);
  };
  return same_bytes(a.positions, b.positions) && same_bytes(a.uvs, b.uvs) && same_bytes(a.indices, b.indices);
}

}  // namespace tirtha::mesh
