#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "tirtha/api/service.hpp"
#include "tirtha/common/clock.hpp"
#include "tirtha/common/config.hpp"
#include "tirtha/ingest/image.hpp"
#include "tirtha/ingest/safety.hpp"
#include "tirtha/mesh/mesh.hpp"
#include "tirtha/orchestrator/platform.hpp"

namespace fixture {

using tirtha::ingest::Raster;

/// Portable RNG helpers (no reliance on std distributions' implementation).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform();  // [0, 1)
  double gaussian();
  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

Raster gray(int w, int h, std::uint8_t value);
/// 256x256 gray raster whose column index is the luma value.
Raster ramp256();
/// Left half `a`, right half `b`, plus Gaussian noise, clamped to [0, 255].
Raster two_tone(int w, int h, std::uint8_t a, std::uint8_t b, double sigma, std::uint64_t seed);
Raster checkerboard(int w, int h);
Raster random_raster(int w, int h, std::uint64_t seed);
std::vector<std::uint8_t> luma_of(const Raster& r);

enum class PhotoKind { Clean, LowDr, Noisy };
/// Stand-in for a contributor photo: smooth tinted structure plus grain.
Raster photo(PhotoKind kind, int w, int h, std::uint64_t seed);
std::vector<std::uint8_t> photo_jpeg(PhotoKind kind, int w, int h, std::uint64_t seed, bool exif = true);
std::vector<std::uint8_t> png_signature_bytes();

/// n x n vertices on the unit square (z = 0), (n-1)^2 * 2 triangles, with uvs.
tirtha::mesh::TriangleMesh grid(int n);
/// UV sphere of radius 1: (rings + 1) * (segments + 1) vertices with seam
/// duplicates, optional random texture of side `texture_side`.
tirtha::mesh::TriangleMesh sphere(int rings, int segments, int texture_side = 0, std::uint64_t seed = 1);
/// Random triangle soup / fans with random bounds; optionally textured.
tirtha::mesh::TriangleMesh random_mesh(std::uint64_t seed, bool texture = false);

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Platform over a private directory and a manual clock. Unit-test defaults:
/// small images accepted, small synthetic textures, deterministic ark seed.
struct Harness {
  explicit Harness(tirtha::Config overrides = {}, bool test_defaults = true,
                   tirtha::orchestrator::PlatformParts parts = {});

  tirtha::orchestrator::Platform& platform() { return *platform_; }
  tirtha::Store& store() { return platform_->store(); }
  /// The stub filter, unless a custom one was passed in.
  tirtha::ingest::StubLocalFilter& local() { return *local_; }

  tirtha::SiteRecord make_site(const std::string& name = "Somanatha Temple", tirtha::ReconOptions options = {});
  tirtha::ContributorRecord make_contributor(const std::string& email = "ravi@example.org");
  /// Stores JPEG bytes and records them as one contribution (PENDING images,
  /// preprocessing jobs enqueued).
  tirtha::ContributionRecord contribute(tirtha::SiteId site, tirtha::ContributorId who,
                                       const std::vector<std::vector<std::uint8_t>>& jpegs);
  /// `n` clean photos of size w x h with distinct seeds starting at `seed`.
  static std::vector<std::vector<std::uint8_t>> clean_photos(int n, int w = 96, int h = 72, std::uint64_t seed = 1);

  TempDir dir;
  tirtha::ManualClock clock;
  tirtha::Config config;
  tirtha::ingest::StubLocalFilter* local_ = nullptr;
  std::unique_ptr<tirtha::orchestrator::Platform> platform_;
};

/// Harness plus a live HTTP service on a loopback port, an HS256 verifier
/// keyed with kTokenSecret and one admin token.
struct ApiHarness : Harness {
  static constexpr const char* kTokenSecret = "test-signing-key";
  static constexpr const char* kAdminToken = "admin-token-1";

  explicit ApiHarness(tirtha::Config overrides = {}, tirtha::orchestrator::PlatformParts parts = {});
  ~ApiHarness();

  /// Signed bearer token for a contributor; expires one hour after the clock's now.
  std::string token(const std::string& email = "ravi@example.org", bool verified = true,
                    const std::string& name = "Ravi") const;
  std::string url() const { return "127.0.0.1"; }
  int port() const { return service->port(); }

  tirtha::api::Hs256JwtVerifier verifier{kTokenSecret, "", clock};
  std::unique_ptr<tirtha::api::ApiService> service;
};

}  // namespace fixture
