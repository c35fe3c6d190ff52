#pragma once

// Data-parallel inner loops shared by image assessment and mesh post-processing.
//
// Every kernel exists twice with identical signatures: `serial` is the plain
// reference implementation kept for testing, `parallel` is the OpenMP build
// used in production. Results are required to match bit for bit (all
// reductions are integer, all per-element float math is identical).

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tirtha::kernels {

struct LaplacianMoments {
  std::int64_t sum = 0;
  std::uint64_t sum_squares = 0;
  std::uint64_t count = 0;

  double variance() const {
    if (count == 0) return 0.0;
    double n = static_cast<double>(count);
    double mean = static_cast<double>(sum) / n;
    return static_cast<double>(sum_squares) / n - mean * mean;
  }
};

struct Vec3f {
  float x = 0, y = 0, z = 0;
};

struct GridSpec {
  Vec3f origin;
  double cell = 1.0;
  std::array<std::uint32_t, 3> dims{1, 1, 1};
};

#define TIRTHA_KERNEL_DECLS                                                                          \
  /* BT.601 luma, rounded: (299 R + 587 G + 114 B + 500) / 1000. */                                  \
  void luma_bt601(std::span<const std::uint8_t> rgb, std::span<std::uint8_t> luma);                  \
  std::array<std::uint64_t, 256> histogram256(std::span<const std::uint8_t> values);                 \
  /* Sum of |response| of the 3x3 kernel [1,-2,1; -2,4,-2; 1,-2,1] over interior pixels. */          \
  std::uint64_t laplacian_abs_sum(std::span<const std::uint8_t> luma, int width, int height);        \
  /* Moments of the 4-neighbour Laplacian [0,1,0; 1,-4,1; 0,1,0] over interior pixels. */           \
  LaplacianMoments laplacian4_moments(std::span<const std::uint8_t> luma, int width, int height);    \
  /* Halves each dimension (min 1) with a rounded box filter over 2x2 blocks. */                     \
  void box_downsample2(std::span<const std::uint8_t> src, int width, int height, int channels,       \
                       std::span<std::uint8_t> dst);                                                 \
  /* q = round((p - min) / extent * 65535), clamped; zero extent maps to 0. */                       \
  void quantize_unorm16(std::span<const float> values, int components, std::span<const float> mins,  \
                        std::span<const float> extents, std::span<std::uint16_t> out);               \
  /* Packed (ix, iy, iz) cell key per position, 21 bits per axis. */                                 \
  void cluster_keys(std::span<const Vec3f> positions, const GridSpec& grid, std::span<std::uint64_t> keys);

namespace serial {
TIRTHA_KERNEL_DECLS
}  // namespace serial

namespace parallel {
TIRTHA_KERNEL_DECLS
/// Threads OpenMP will use for parallel regions.
int max_threads();
}  // namespace parallel

#undef TIRTHA_KERNEL_DECLS

/// Production entry points.
namespace fast = parallel;

}  // namespace tirtha::kernels
