#pragma once

#include "tirtha/mesh/mesh.hpp"

namespace tirtha::mesh {

struct DecimateStats {
  double cell = 0.0;  // chosen grid cell size, 0 for identity
  int iterations = 0;
};

/// Uniform-grid vertex clustering. Bisects the cell size (at most 32 steps)
/// for the largest tested face count not above floor(factor * faces).
/// Degenerate and duplicate triangles are dropped; each cluster is
/// represented by its member closest to the cluster centroid, which also
/// supplies the uv. factor >= 1 returns the mesh unchanged.
TriangleMesh decimate(const TriangleMesh& mesh, double factor, DecimateStats* stats = nullptr);

/// One clustering pass at a fixed cell size.
TriangleMesh cluster_at(const TriangleMesh& mesh, double cell);

/// Laplacian smoothing v += (centroid(neighbours) - v) / (1 + lmd), repeated
/// round(2 * eta) times. Boundary vertices stay fixed.
TriangleMesh denoise(const TriangleMesh& mesh, double lmd, double eta);

/// Decimates to `factor`, then splits every triangle into four at edge midpoints.
TriangleMesh resample(const TriangleMesh& mesh, double factor);

TriangleMesh subdivide_midpoint(const TriangleMesh& mesh);

}  // namespace tirtha::mesh
