#include <omp.h>

#include <cstdlib>

#include "common.hpp"

namespace tirtha::kernels::parallel {

int max_threads() { return omp_get_max_threads(); }

void luma_bt601(std::span<const std::uint8_t> rgb, std::span<std::uint8_t> luma) {
  const auto n = static_cast<std::ptrdiff_t>(luma.size());
  const std::uint8_t* src = rgb.data();
  std::uint8_t* dst = luma.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) dst[i] = detail::luma_of(src + 3 * i);
}

std::array<std::uint64_t, 256> histogram256(std::span<const std::uint8_t> values) {
  std::array<std::uint64_t, 256> h{};
  const auto n = static_cast<std::ptrdiff_t>(values.size());
  const std::uint8_t* v = values.data();
#pragma omp parallel
  {
    std::array<std::uint64_t, 256> local{};
#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t i = 0; i < n; ++i) ++local[v[i]];
#pragma omp critical
    for (int b = 0; b < 256; ++b) h[b] += local[b];
  }
  return h;
}

std::uint64_t laplacian_abs_sum(std::span<const std::uint8_t> luma, int width, int height) {
  std::uint64_t total = 0;
  const std::uint8_t* l = luma.data();
#pragma omp parallel for schedule(static) reduction(+ : total)
  for (int y = 1; y < height - 1; ++y) {
    std::uint64_t row = 0;
    for (int x = 1; x + 1 < width; ++x) {
      row += static_cast<std::uint64_t>(std::abs(detail::laplacian9_at(l, width, x, y)));
    }
    total += row;
  }
  return total;
}

LaplacianMoments laplacian4_moments(std::span<const std::uint8_t> luma, int width, int height) {
  std::int64_t sum = 0;
  std::uint64_t sq = 0, count = 0;
  const std::uint8_t* l = luma.data();
#pragma omp parallel for schedule(static) reduction(+ : sum, sq, count)
  for (int y = 1; y < height - 1; ++y) {
    for (int x = 1; x + 1 < width; ++x) {
      std::int64_t r = detail::laplacian4_at(l, width, x, y);
      sum += r;
      sq += static_cast<std::uint64_t>(r * r);
      ++count;
    }
  }
  return LaplacianMoments{sum, sq, count};
}

void box_downsample2(std::span<const std::uint8_t> src, int width, int height, int channels,
                     std::span<std::uint8_t> dst) {
  int ow = std::max(1, width / 2), oh = std::max(1, height / 2);
  const std::uint8_t* s = src.data();
  std::uint8_t* d = dst.data();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      detail::downsample_pixel(s, width, height, channels, x, y, d + (static_cast<std::size_t>(y) * ow + x) * channels);
    }
  }
}

void quantize_unorm16(std::span<const float> values, int components, std::span<const float> mins,
                      std::span<const float> extents, std::span<std::uint16_t> out) {
  const auto n = static_cast<std::ptrdiff_t>(values.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    int c = static_cast<int>(i % components);
    out[i] = detail::quantize_one(values[i], mins[c], extents[c]);
  }
}

void cluster_keys(std::span<const Vec3f> positions, const GridSpec& grid, std::span<std::uint64_t> keys) {
  const auto n = static_cast<std::ptrdiff_t>(positions.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) keys[i] = detail::key_of(positions[i], grid);
}

}  // namespace tirtha::kernels::parallel
