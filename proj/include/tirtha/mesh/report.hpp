#pragma once

#include <cstdint>

#include <nlohmann/json.hpp>

#include "tirtha/mesh/mesh.hpp"

namespace tirtha::mesh {

struct CompressionReport {
  std::uint64_t input_bytes = 0;
  std::uint64_t output_bytes = 0;
  double ratio = 0.0;  // 1 - output / input
  std::size_t vertices_before = 0;
  std::size_t vertices_after = 0;
  std::size_t faces_before = 0;
  std::size_t faces_after = 0;

  nlohmann::json to_json() const;
};

CompressionReport compression_report(std::uint64_t input_bytes, std::uint64_t output_bytes,
                                     const TriangleMesh& before, const TriangleMesh& after);

double compression_ratio(std::uint64_t input_bytes, std::uint64_t output_bytes);

struct ConvertOptions {
  double factor = 0.3;
  int texture_side = 2048;
  bool quantize = true;
  bool denoise = false;
  double lmd = 2.0;
  double eta = 1.5;
  bool resample = false;
  double resample_factor = 0.3;
};

struct ConvertResult {
  std::vector<std::uint8_t> glb;
  CompressionReport report;
};

/// The post-processing chain: optional denoise, decimate (or resample),
/// texture downsample, GLB. `input_bytes` is the size of the raw OBJ bundle.
ConvertResult convert(const TriangleMesh& mesh, std::uint64_t input_bytes, const ConvertOptions& options);

}  // namespace tirtha::mesh
