#include <algorithm>
#include <cmath>
#include <map>

#include "tirtha/common/error.hpp"
#include "tirtha/mesh/simplify.hpp"

namespace tirtha::mesh {
namespace {

struct Adjacency {
  std::vector<std::vector<std::uint32_t>> neighbours;
  std::vector<bool> boundary;
};

Adjacency adjacency(const TriangleMesh& mesh) {
  Adjacency adj;
  adj.neighbours.resize(mesh.positions.size());
  adj.boundary.assign(mesh.positions.size(), false);
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_faces;
  for (std::size_t f = 0; f + 2 < mesh.indices.size(); f += 3) {
    for (int k = 0; k < 3; ++k) {
      auto a = mesh.indices[f + k], b = mesh.indices[f + (k + 1) % 3];
      adj.neighbours[a].push_back(b);
      adj.neighbours[b].push_back(a);
      ++edge_faces[{std::min(a, b), std::max(a, b)}];
    }
  }
  for (auto& n : adj.neighbours) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  for (const auto& [edge, count] : edge_faces) {
    if (count == 1) adj.boundary[edge.first] = adj.boundary[edge.second] = true;
  }
  return adj;
}

}  // namespace

TriangleMesh denoise(const TriangleMesh& mesh, double lmd, double eta) {
  if (lmd < 0 || eta < 0) throw Error(ErrorCode::Validation, "denoise parameters must be non-negative");
  mesh.validate();
  TriangleMesh out = mesh;
  const int iterations = static_cast<int>(std::lround(eta * 2.0));
  const double weight = 1.0 / (1.0 + lmd);
  Adjacency adj = adjacency(mesh);
  std::vector<Vec3f> next(out.positions.size());
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t v = 0; v < out.positions.size(); ++v) {
      const auto& p = out.positions[v];
      const auto& n = adj.neighbours[v];
      if (adj.boundary[v] || n.empty()) {
        next[v] = p;
        continue;
      }
      double cx = 0, cy = 0, cz = 0;
      for (auto u : n) {
        cx += out.positions[u].x;
        cy += out.positions[u].y;
        cz += out.positions[u].z;
      }
      double k = static_cast<double>(n.size());
      next[v] = {float(p.x + weight * (cx / k - p.x)), float(p.y + weight * (cy / k - p.y)),
                 float(p.z + weight * (cz / k - p.z))};
    }
    out.positions.swap(next);
  }
  return out;
}

}  // namespace tirtha::mesh
