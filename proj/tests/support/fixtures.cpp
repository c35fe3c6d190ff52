#include "fixtures.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>

#include "tirtha/common/digest.hpp"
#include "tirtha/ingest/exif.hpp"
#include "tirtha/ingest/jpeg.hpp"

namespace fixture {

using namespace tirtha;
namespace fs = std::filesystem;

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740992.0); }

double Rng::gaussian() {
  // Box-Muller; u1 kept away from zero
  double u1 = uniform();
  double u2 = uniform();
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

static std::uint8_t clamp8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

Raster gray(int w, int h, std::uint8_t value) {
  Raster r(w, h, 3);
  std::fill(r.pixels.begin(), r.pixels.end(), value);
  return r;
}

Raster ramp256() {
  Raster r(256, 256, 3);
  for (int y = 0; y < 256; ++y)
    for (int x = 0; x < 256; ++x) {
      auto* p = r.at(x, y);
      p[0] = p[1] = p[2] = static_cast<std::uint8_t>(x);
    }
  return r;
}

Raster two_tone(int w, int h, std::uint8_t a, std::uint8_t b, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  Raster r(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = (x < w / 2 ? a : b) + (sigma > 0 ? sigma * rng.gaussian() : 0.0);
      auto* p = r.at(x, y);
      p[0] = p[1] = p[2] = clamp8(v);
    }
  return r;
}

Raster checkerboard(int w, int h) {
  Raster r(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto* p = r.at(x, y);
      p[0] = p[1] = p[2] = ((x + y) % 2) ? 255 : 0;
    }
  return r;
}

Raster random_raster(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  Raster r(w, h, 3);
  // mixture of flat, low-contrast and noisy content so labels vary
  int style = static_cast<int>(rng.below(4));
  double lo = rng.uniform() * 200, span = rng.uniform() * (255 - lo), sigma = rng.uniform() * 40;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto* p = r.at(x, y);
      for (int c = 0; c < 3; ++c) {
        double base = style == 0 ? lo : lo + span * (0.5 + 0.5 * std::sin(0.3 * x + 0.17 * y + c));
        double v = style == 3 ? rng.uniform() * 256 : base + sigma * rng.gaussian();
        p[c] = clamp8(v);
      }
    }
  return r;
}

std::vector<std::uint8_t> luma_of(const Raster& r) {
  std::vector<std::uint8_t> out(r.pixel_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto* p = r.pixels.data() + i * r.channels;
    out[i] = static_cast<std::uint8_t>((299 * p[0] + 587 * p[1] + 114 * p[2] + 500) / 1000);
  }
  return out;
}

Raster photo(PhotoKind kind, int w, int h, std::uint64_t seed) {
  Rng rng(seed * 7919 + static_cast<std::uint64_t>(kind));
  double lo = 8, hi = 247, grain = 4.0;
  if (kind == PhotoKind::LowDr) {
    double centre = 90 + rng.uniform() * 70;
    lo = centre - 30;
    hi = centre + 30;
  } else if (kind == PhotoKind::Noisy) {
    grain = 28.0 + rng.uniform() * 8.0;
  }
  double fx = 2.0 + rng.uniform() * 3.0, fy = 1.5 + rng.uniform() * 3.0, phase = rng.uniform() * 6.28;
  double tint_r = 0.9 + 0.2 * rng.uniform(), tint_b = 0.8 + 0.2 * rng.uniform();
  Raster r(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double u = static_cast<double>(x) / w, v = static_cast<double>(y) / h;
      // blocky "masonry" plus smooth shading keeps both edges and gradients
      double shade = 0.5 + 0.3 * std::sin(2 * 3.14159 * fx * u + phase) * std::cos(2 * 3.14159 * fy * v);
      double courses = (static_cast<int>(v * 12) % 2 == 0) ? 0.12 : -0.12;
      double t = std::clamp(shade + courses, 0.0, 1.0);
      double luma = lo + (hi - lo) * t + grain * rng.gaussian();
      auto* p = r.at(x, y);
      p[0] = clamp8(luma * tint_r);
      p[1] = clamp8(luma);
      p[2] = clamp8(luma * tint_b);
    }
  }
  return r;
}

std::vector<std::uint8_t> photo_jpeg(PhotoKind kind, int w, int h, std::uint64_t seed, bool exif) {
  ingest::EncodeOptions opts;
  opts.quality = 95;
  if (exif) {
    ingest::ExifFields f;
    f.make = "FieldCam";
    f.model = "FC-" + std::to_string(seed % 7);
    f.date_time = "2023:01:14 09:30:00";
    f.orientation = 1;
    opts.app1 = ingest::build_exif_payload(f);
  }
  return ingest::encode_jpeg(photo(kind, w, h, seed), opts);
}

std::vector<std::uint8_t> png_signature_bytes() {
  std::vector<std::uint8_t> b = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A, 0, 0, 0, 13, 'I', 'H', 'D', 'R'};
  b.resize(64, 0);
  return b;
}

mesh::TriangleMesh grid(int n) {
  mesh::TriangleMesh m;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      float u = static_cast<float>(i) / (n - 1), v = static_cast<float>(j) / (n - 1);
      m.positions.push_back({u, v, 0.0f});
      m.uvs.push_back({u, v});
    }
  for (int j = 0; j + 1 < n; ++j)
    for (int i = 0; i + 1 < n; ++i) {
      std::uint32_t a = j * n + i, b = a + 1, c = a + n, d = c + 1;
      m.indices.insert(m.indices.end(), {a, b, d, a, d, c});
    }
  return m;
}

mesh::TriangleMesh sphere(int rings, int segments, int texture_side, std::uint64_t seed) {
  const double pi = 3.14159265358979323846;
  mesh::TriangleMesh m;
  for (int r = 0; r <= rings; ++r) {
    double theta = pi * r / rings;
    for (int s = 0; s <= segments; ++s) {
      double phi = 2 * pi * s / segments;
      m.positions.push_back({static_cast<float>(std::sin(theta) * std::cos(phi)),
                             static_cast<float>(std::sin(theta) * std::sin(phi)), static_cast<float>(std::cos(theta))});
      m.uvs.push_back({static_cast<float>(s) / segments, static_cast<float>(r) / rings});
    }
  }
  const std::uint32_t row = static_cast<std::uint32_t>(segments + 1);
  for (int r = 0; r < rings; ++r)
    for (int s = 0; s < segments; ++s) {
      std::uint32_t a = r * row + s, b = a + 1, c = a + row, d = c + 1;
      if (r != 0) m.indices.insert(m.indices.end(), {a, c, b});
      if (r != rings - 1) m.indices.insert(m.indices.end(), {b, c, d});
    }
  if (texture_side > 0) {
    mesh::TextureImage tex;
    tex.pixels = photo(PhotoKind::Clean, texture_side, texture_side, seed);
    m.texture = tex;
  }
  return m;
}

mesh::TriangleMesh random_mesh(std::uint64_t seed, bool texture) {
  Rng rng(seed);
  mesh::TriangleMesh m;
  std::size_t verts = 3 + rng.below(3000);
  double scale = std::pow(10.0, rng.uniform() * 6 - 3);
  double offset = (rng.uniform() - 0.5) * 2000;
  bool flat_axis = rng.below(10) == 0;  // some meshes have a zero-extent axis
  for (std::size_t i = 0; i < verts; ++i) {
    float x = static_cast<float>(offset + scale * rng.uniform());
    float y = static_cast<float>(offset + scale * rng.uniform());
    float z = flat_axis ? static_cast<float>(offset) : static_cast<float>(offset + scale * 0.5 * rng.uniform());
    m.positions.push_back({x, y, z});
    m.uvs.push_back({static_cast<float>(rng.uniform()), static_cast<float>(rng.uniform())});
  }
  std::size_t faces = 1 + rng.below(2 * verts);
  for (std::size_t f = 0; f < faces; ++f) {
    for (int k = 0; k < 3; ++k) m.indices.push_back(static_cast<std::uint32_t>(rng.below(verts)));
  }
  if (texture) {
    mesh::TextureImage tex;
    tex.pixels = random_raster(16 << rng.below(3), 16 << rng.below(3), seed);
    m.texture = tex;
  }
  return m;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("tirtha-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Harness::Harness(Config overrides, bool test_defaults, orchestrator::PlatformParts parts) {
  config.set("storage.root", (dir.path() / "data").string());
  config.set("archive.root", (dir.path() / "archive").string());
  config.set("ark.seed", 7);
  if (test_defaults) {
    config.set("ingest.min_short_side", 64);
    config.set("backend.synthetic.max_texture_side", 256);
  }
  for (const auto& [k, v] : overrides.values()) config.set(k, v);

  if (!parts.local_filter) {
    auto local = std::make_unique<ingest::StubLocalFilter>(ingest::StubLocalFilter::from_config(config));
    local_ = local.get();
    parts.local_filter = std::move(local);
  }
  platform_ = std::make_unique<orchestrator::Platform>(config, clock, std::move(parts));
}

SiteRecord Harness::make_site(const std::string& name, ReconOptions options) {
  SiteInput in;
  in.name = name;
  in.locality = "Khurdha";
  in.state = "Odisha";
  in.country = "India";
  return store().create_site(in, options, clock.now());
}

ContributorRecord Harness::make_contributor(const std::string& email) {
  return store().upsert_contributor(email, "Ravi");
}

ContributionRecord Harness::contribute(SiteId site, ContributorId who,
                                       const std::vector<std::vector<std::uint8_t>>& jpegs) {
  std::vector<ImageBlob> blobs;
  for (const auto& bytes : jpegs) {
    std::string sha = sha256_hex(bytes);
    auto info = ingest::probe_jpeg(bytes);
    fs::path stored = platform_->blobs().put_image(bytes, sha);
    blobs.push_back({stored.string(), static_cast<std::int64_t>(bytes.size()), info.width, info.height,
                     info.exif.has_value(), sha});
  }
  return store().record_contribution(site, who, blobs, clock.now());
}

std::vector<std::vector<std::uint8_t>> Harness::clean_photos(int n, int w, int h, std::uint64_t seed) {
  std::vector<std::vector<std::uint8_t>> out;
  for (int i = 0; i < n; ++i) out.push_back(photo_jpeg(PhotoKind::Clean, w, h, seed + i));
  return out;
}

ApiHarness::ApiHarness(Config overrides, orchestrator::PlatformParts parts)
    : Harness(std::move(overrides), true, std::move(parts)) {
  service = std::make_unique<api::ApiService>(platform(), verifier, api::AdminTokens({kAdminToken}),
                                              api::ServiceSettings::from_config(config));
  if (!service->start("127.0.0.1", 0)) throw std::runtime_error("could not bind a loopback port");
}

ApiHarness::~ApiHarness() { service->stop(); }

std::string ApiHarness::token(const std::string& email, bool verified, const std::string& name) const {
  nlohmann::json claims = {{"sub", "sub-" + email},
                           {"email", email},
                           {"name", name},
                           {"email_verified", verified},
                           {"exp", clock.now() / 1000 + 3600}};
  return api::sign_hs256(claims, kTokenSecret);
}

}  // namespace fixture
