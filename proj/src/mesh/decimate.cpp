#include "tirtha/mesh/simplify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "tirtha/common/error.hpp"

namespace tirtha::mesh {
namespace {

constexpr int kMaxIterations = 32;
constexpr std::uint32_t kMaxCellsPerAxis = (1u << 21) - 1;

struct Clustering {
  std::vector<std::uint32_t> cluster_of;  // per input vertex, dense cluster id
  std::size_t clusters = 0;
  std::vector<std::array<std::uint32_t, 3>> faces;  // in cluster ids
};

kernels::GridSpec grid_for(const Bounds& b, double cell) {
  kernels::GridSpec g;
  g.origin = b.min;
  g.cell = cell;
  auto e = b.extent();
  auto cells = [&](float len) {
    double n = std::floor(double(len) / cell) + 1.0;
    return static_cast<std::uint32_t>(std::min<double>(n, kMaxCellsPerAxis));
  };
  g.dims = {cells(e.x), cells(e.y), cells(e.z)};
  return g;
}

struct FaceHash {
  std::size_t operator()(const std::array<std::uint32_t, 3>& f) const {
    std::uint64_t h = f[0];
    h = h * 0x9E3779B97F4A7C15ull ^ f[1];
    h = h * 0x9E3779B97F4A7C15ull ^ f[2];
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

Clustering cluster(const TriangleMesh& mesh, const Bounds& bounds, double cell) {
  Clustering c;
  std::vector<std::uint64_t> keys(mesh.positions.size());
  kernels::fast::cluster_keys(mesh.positions, grid_for(bounds, cell), keys);

  std::vector<std::uint64_t> sorted = keys;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  c.clusters = sorted.size();
  c.cluster_of.resize(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    c.cluster_of[i] =
        static_cast<std::uint32_t>(std::lower_bound(sorted.begin(), sorted.end(), keys[i]) - sorted.begin());
  }

  std::unordered_set<std::array<std::uint32_t, 3>, FaceHash> seen;
  seen.reserve(mesh.face_count());
  for (std::size_t f = 0; f + 2 < mesh.indices.size(); f += 3) {
    std::array<std::uint32_t, 3> t{c.cluster_of[mesh.indices[f]], c.cluster_of[mesh.indices[f + 1]],
                                   c.cluster_of[mesh.indices[f + 2]]};
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
    auto key = t;
    std::sort(key.begin(), key.end());
    if (!seen.insert(key).second) continue;
    c.faces.push_back(t);
  }
  return c;
}

TriangleMesh build(const TriangleMesh& mesh, const Clustering& c) {
  // centroid per cluster
  std::vector<double> sum(c.clusters * 3, 0.0);
  std::vector<std::uint32_t> members(c.clusters, 0);
  for (std::size_t v = 0; v < mesh.positions.size(); ++v) {
    auto k = c.cluster_of[v];
    sum[k * 3] += mesh.positions[v].x;
    sum[k * 3 + 1] += mesh.positions[v].y;
    sum[k * 3 + 2] += mesh.positions[v].z;
    ++members[k];
  }
  std::vector<std::uint32_t> rep(c.clusters, std::numeric_limits<std::uint32_t>::max());
  std::vector<double> best(c.clusters, std::numeric_limits<double>::infinity());
  for (std::size_t v = 0; v < mesh.positions.size(); ++v) {
    auto k = c.cluster_of[v];
    double n = members[k];
    double dx = mesh.positions[v].x - sum[k * 3] / n;
    double dy = mesh.positions[v].y - sum[k * 3 + 1] / n;
    double dz = mesh.positions[v].z - sum[k * 3 + 2] / n;
    double d = dx * dx + dy * dy + dz * dz;
    if (d < best[k]) {  // strict: lowest index wins ties
      best[k] = d;
      rep[k] = static_cast<std::uint32_t>(v);
    }
  }

  // keep only clusters referenced by a surviving face, in cluster order
  std::vector<std::uint32_t> remap(c.clusters, std::numeric_limits<std::uint32_t>::max());
  for (const auto& f : c.faces)
    for (auto k : f) remap[k] = 0;
  TriangleMesh out;
  for (std::size_t k = 0; k < c.clusters; ++k) {
    if (remap[k] == 0) {
      remap[k] = static_cast<std::uint32_t>(out.positions.size());
      out.positions.push_back(mesh.positions[rep[k]]);
      if (mesh.has_uvs()) out.uvs.push_back(mesh.uvs[rep[k]]);
    }
  }
  out.indices.reserve(c.faces.size() * 3);
  for (const auto& f : c.faces)
    for (auto k : f) out.indices.push_back(remap[k]);
  out.texture = mesh.texture;
  return out;
}

}  // namespace

TriangleMesh cluster_at(const TriangleMesh& mesh, double cell) {
  if (!(cell > 0)) throw Error(ErrorCode::Validation, "cell size must be positive");
  auto bounds = mesh.bounds();
  return build(mesh, cluster(mesh, bounds, cell));
}

TriangleMesh decimate(const TriangleMesh& mesh, double factor, DecimateStats* stats) {
  if (!(factor > 0)) throw Error(ErrorCode::Validation, "decimation factor must be in (0, 1]");
  mesh.validate();
  if (factor >= 1.0 || mesh.face_count() == 0) {
    if (stats) *stats = {};
    return mesh;
  }
  const auto target = static_cast<std::size_t>(std::floor(factor * static_cast<double>(mesh.face_count())));
  const Bounds bounds = mesh.bounds();
  auto e = bounds.extent();
  double longest = std::max({double(e.x), double(e.y), double(e.z)});
  double diag = bounds.diagonal();
  if (longest <= 0) {  // every vertex coincides: nothing survives clustering
    TriangleMesh out;
    out.texture = mesh.texture;
    return out;
  }

  // hi: one cell spans everything, so at most a single point survives
  double lo = longest / double(kMaxCellsPerAxis - 1), hi = diag * 2.0;
  std::optional<Clustering> best;
  double best_cell = hi;
  int it = 0;
  for (; it < kMaxIterations; ++it) {
    double mid = std::sqrt(lo * hi);  // cell sizes span many decades
    if (!(mid > lo && mid < hi)) break;
    Clustering c = cluster(mesh, bounds, mid);
    if (c.faces.size() <= target) {
      if (!best || c.faces.size() > best->faces.size()) {
        best = std::move(c);
        best_cell = mid;
      }
      if (best->faces.size() == target) {
        ++it;
        break;
      }
      hi = mid;
    } else {
      lo = mid;
    }
  }
  if (stats) *stats = {best_cell, it};
  if (!best) best = cluster(mesh, bounds, hi);
  return build(mesh, *best);
}

TriangleMesh subdivide_midpoint(const TriangleMesh& mesh) {
  TriangleMesh out;
  out.positions = mesh.positions;
  out.uvs = mesh.uvs;
  out.texture = mesh.texture;
  std::unordered_map<std::uint64_t, std::uint32_t> midpoints;
  auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
    std::uint64_t key = std::uint64_t(std::min(a, b)) << 32 | std::max(a, b);
    auto [it, inserted] = midpoints.try_emplace(key, static_cast<std::uint32_t>(out.positions.size()));
    if (inserted) {
      const auto& p = mesh.positions[a];
      const auto& q = mesh.positions[b];
      out.positions.push_back({(p.x + q.x) * 0.5f, (p.y + q.y) * 0.5f, (p.z + q.z) * 0.5f});
      if (mesh.has_uvs()) {
        out.uvs.push_back({(mesh.uvs[a].u + mesh.uvs[b].u) * 0.5f, (mesh.uvs[a].v + mesh.uvs[b].v) * 0.5f});
      }
    }
    return it->second;
  };
  out.indices.reserve(mesh.indices.size() * 4);
  for (std::size_t f = 0; f + 2 < mesh.indices.size(); f += 3) {
    auto a = mesh.indices[f], b = mesh.indices[f + 1], c = mesh.indices[f + 2];
    auto ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
    for (auto v : {a, ab, ca, ab, b, bc, ca, bc, c, ab, bc, ca}) out.indices.push_back(v);
  }
  return out;
}

TriangleMesh resample(const TriangleMesh& mesh, double factor) {
  return subdivide_midpoint(decimate(mesh, factor));
}

}  // namespace tirtha::mesh
