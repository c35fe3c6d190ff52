#include "tirtha/orchestrator/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "tirtha/common/digest.hpp"
#include "tirtha/common/error.hpp"
#include "tirtha/common/io.hpp"
#include "tirtha/mesh/obj.hpp"

namespace tirtha::orchestrator {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// uniform in [-1, 1]
double hash_unit(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = splitmix64(seed ^ splitmix64(a * 0x100000001B3ull + b));
  return static_cast<double>(h >> 11) * (2.0 / 9007199254740992.0) - 1.0;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

// Periodic value noise on a `cells` x `cells` lattice, sampled at (x, y) in [0, 1).
double value_noise(std::uint64_t seed, int cells, double x, double y) {
  double fx = x * cells, fy = y * cells;
  int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
  double tx = smooth(fx - x0), ty = smooth(fy - y0);
  auto at = [&](int i, int j) {
    return hash_unit(seed, static_cast<std::uint64_t>(i % cells), static_cast<std::uint64_t>(j % cells));
  };
  double a = at(x0, y0), b = at(x0 + 1, y0), c = at(x0, y0 + 1), d = at(x0 + 1, y0 + 1);
  return (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
}

std::uint64_t seed_from_digest(const std::string& digest) {
  return std::stoull(digest.substr(0, 16), nullptr, 16);
}

}  // namespace

int registered_views(int images) { return images - (images > 0 && images % 17 == 0 ? 1 : 0); }

ingest::Raster procedural_texture(int side, std::uint64_t seed) {
  ingest::Raster tex(side, side, 3);
  const int octaves[] = {4, 16, 64, 256};
  const double weights[] = {0.5, 0.25, 0.15, 0.1};
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      double u = (x + 0.5) / side, v = (y + 0.5) / side;
      double n = 0;
      for (int o = 0; o < 4; ++o) n += weights[o] * value_noise(seed + o, octaves[o], u, v);
      double grain = hash_unit(seed ^ 0xA5A5A5A5ull, static_cast<std::uint64_t>(x), static_cast<std::uint64_t>(y));
      double shade = 1.0 + 0.35 * n + 0.04 * grain;
      std::uint8_t* p = tex.at(x, y);
      p[0] = static_cast<std::uint8_t>(std::clamp(178.0 * shade, 0.0, 255.0));
      p[1] = static_cast<std::uint8_t>(std::clamp(146.0 * shade, 0.0, 255.0));
      p[2] = static_cast<std::uint8_t>(std::clamp(108.0 * shade, 0.0, 255.0));
    }
  }
  return tex;
}

mesh::TriangleMesh synthetic_sphere(const SphereSpec& spec) {
  if (spec.rows < 2 || spec.cols < 3) throw Error(ErrorCode::Validation, "sphere needs rows >= 2 and cols >= 3");
  const int R = spec.rows, C = spec.cols, seam = C - 1;
  mesh::TriangleMesh m;
  m.positions.reserve(static_cast<std::size_t>(R) * C);
  m.uvs.reserve(static_cast<std::size_t>(R) * C);
  for (int i = 0; i < R; ++i) {
    double theta = std::numbers::pi * (i + 0.5) / R;
    for (int j = 0; j < C; ++j) {
      double phi = 2.0 * std::numbers::pi * j / seam;
      int jn = j % seam;  // seam vertices share their displacement
      double r = 1.0 + 0.06 * std::sin(4 * theta) * std::cos(3 * phi) +
                 0.015 * hash_unit(spec.seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(jn));
      double s = std::sin(theta);
      m.positions.push_back({float(r * s * std::cos(phi)), float(r * std::cos(theta)), float(r * s * std::sin(phi))});
      m.uvs.push_back({float(double(j) / seam), float(1.0 - (i + 0.5) / R)});
    }
  }
  m.indices.reserve(static_cast<std::size_t>(R - 1) * seam * 6);
  for (int i = 0; i + 1 < R; ++i) {
    for (int j = 0; j < seam; ++j) {
      auto a = static_cast<std::uint32_t>(i * C + j), b = static_cast<std::uint32_t>((i + 1) * C + j);
      std::uint32_t c = b + 1, d = a + 1;
      for (auto v : {a, d, c, a, c, b}) m.indices.push_back(v);
    }
  }
  if (spec.texture_side > 0) {
    m.texture = mesh::TextureImage{procedural_texture(spec.texture_side, spec.seed), {}};
  }
  return m;
}

SyntheticBackend::Options SyntheticBackend::options_from_config(const Config& config) {
  Options o;
  o.fail_stage = config.get_string("backend.synthetic.fail_stage", "");
  o.stage_delay_ms = static_cast<int>(config.get_int("backend.synthetic.stage_delay_ms", 0));
  o.max_texture_side = static_cast<int>(config.get_int("backend.synthetic.max_texture_side", 4096));
  return o;
}

StageOutcome SyntheticBackend::run_stage(const StageInput& input) {
  const StageSpec& stage = *input.stage;
  std::string previous;
  if (auto manifest = input.input_dir / "manifest.json"; fs::exists(manifest)) {
    previous = nlohmann::json::parse(read_text_file(manifest)).at("digest").get<std::string>();
  }
  std::string material = stage.name + "\n" + stage.params.dump() + "\n" + previous + "\n";
  for (const auto& d : input.image_digests) material += d + ",";
  material += "\n" + std::to_string(input.seed);
  const std::string digest = sha256_hex(material);

  if (options_.stage_delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(options_.stage_delay_ms));
  if (stage.name == options_.fail_stage) {
    throw Error(ErrorCode::StageFailed, stage.name + " failed (synthetic drill)");
  }

  StageOutcome out;
  const int n = static_cast<int>(input.image_digests.size());
  if (stage.name == "StructureFromMotion") {
    out.report = {{"registered_views", registered_views(n)}, {"total_views", n}};
  } else if (stage.name == "Texturing") {
    if (n == 0) throw Error(ErrorCode::StageFailed, "Texturing has no input views");
    int side = stage.params.value("textureSide", 2048);
    SphereSpec spec{2 * n, 64, seed_from_digest(digest), std::min(2 * side, options_.max_texture_side)};
    mesh::TriangleMesh mesh = synthetic_sphere(spec);
    mesh::save_obj(mesh, input.output_dir, "texturedMesh");
    out.report = {{"vertices", mesh.vertex_count()}, {"faces", mesh.face_count()}, {"texture_side", spec.texture_side}};
  }

  nlohmann::json manifest = {{"stage", stage.name}, {"params", stage.params}, {"previous", previous},
                             {"inputs", n},         {"seed", input.seed},     {"digest", digest},
                             {"report", out.report}};
  write_file_atomic(input.output_dir / "manifest.json", std::string_view(manifest.dump(2)));
  return out;
}

}  // namespace tirtha::orchestrator
