#pragma once

#include <string>

#include "tirtha/mesh/mesh.hpp"
#include "tirtha/orchestrator/backend.hpp"

namespace tirtha::orchestrator {

struct SphereSpec {
  int rows = 40;  // latitude rings
  int cols = 64;  // vertices per ring, the last one closing the seam
  std::uint64_t seed = 42;
  int texture_side = 0;  // 0: no texture
};

/// Displaced lat-long sphere with rows * cols vertices and a procedural
/// stone-like texture. Deterministic in the spec.
mesh::TriangleMesh synthetic_sphere(const SphereSpec& spec);

/// Value-noise RGB texture, deterministic in (side, seed).
ingest::Raster procedural_texture(int side, std::uint64_t seed);

int registered_views(int images);

/// Stand-in for the external toolchain: every stage writes a manifest whose
/// digest chains over (stage, params, previous digest, input digests, seed);
/// Texturing writes a displaced sphere with 128 vertices per input image.
class SyntheticBackend : public Backend {
 public:
  struct Options {
    std::string fail_stage;  // stage that reports failure, for drills
    int stage_delay_ms = 0;
    int max_texture_side = 4096;
  };

  SyntheticBackend() = default;
  explicit SyntheticBackend(Options options) : options_(std::move(options)) {}
  static Options options_from_config(const Config& config);

  std::string_view kind() const override { return "synthetic"; }
  StageOutcome run_stage(const StageInput& input) override;
  bool processes_mesh() const override { return false; }

 private:
  Options options_;
};

}  // namespace tirtha::orchestrator
