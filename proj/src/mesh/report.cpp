#include "tirtha/mesh/report.hpp"

#include "tirtha/mesh/glb.hpp"
#include "tirtha/mesh/simplify.hpp"
#include "tirtha/mesh/texture.hpp"

namespace tirtha::mesh {

double compression_ratio(std::uint64_t input_bytes, std::uint64_t output_bytes) {
  if (input_bytes == 0) return 0.0;
  return 1.0 - static_cast<double>(output_bytes) / static_cast<double>(input_bytes);
}

CompressionReport compression_report(std::uint64_t input_bytes, std::uint64_t output_bytes,
                                     const TriangleMesh& before, const TriangleMesh& after) {
  CompressionReport r;
  r.input_bytes = input_bytes;
  r.output_bytes = output_bytes;
  r.ratio = compression_ratio(input_bytes, output_bytes);
  r.vertices_before = before.vertex_count();
  r.vertices_after = after.vertex_count();
  r.faces_before = before.face_count();
  r.faces_after = after.face_count();
  return r;
}

nlohmann::json CompressionReport::to_json() const {
  return {{"input_bytes", input_bytes},         {"output_bytes", output_bytes},
          {"ratio", ratio},                     {"vertices_before", vertices_before},
          {"vertices_after", vertices_after},   {"faces_before", faces_before},
          {"faces_after", faces_after}};
}

ConvertResult convert(const TriangleMesh& mesh, std::uint64_t input_bytes, const ConvertOptions& options) {
  TriangleMesh work = options.denoise ? denoise(mesh, options.lmd, options.eta) : mesh;
  work = decimate(work, options.factor);
  if (options.resample) work = resample(work, options.resample_factor);
  if (work.texture) work.texture = downsample_texture(*work.texture, options.texture_side);

  ConvertResult out;
  GlbOptions glb;
  glb.quantize = options.quantize;
  out.glb = write_glb(work, glb);
  out.report = compression_report(input_bytes, out.glb.size(), mesh, work);
  return out;
}

}  // namespace tirtha::mesh
