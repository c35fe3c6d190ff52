#include <cstdlib>

#include "common.hpp"

namespace tirtha::kernels::serial {

void luma_bt601(std::span<const std::uint8_t> rgb, std::span<std::uint8_t> luma) {
  for (std::size_t i = 0; i < luma.size(); ++i) luma[i] = detail::luma_of(rgb.data() + 3 * i);
}

std::array<std::uint64_t, 256> histogram256(std::span<const std::uint8_t> values) {
  std::array<std::uint64_t, 256> h{};
  for (auto v : values) ++h[v];
  return h;
}

std::uint64_t laplacian_abs_sum(std::span<const std::uint8_t> luma, int width, int height) {
  std::uint64_t total = 0;
  for (int y = 1; y + 1 < height; ++y) {
    for (int x = 1; x + 1 < width; ++x) {
      total += static_cast<std::uint64_t>(std::abs(detail::laplacian9_at(luma.data(), width, x, y)));
    }
  }
  return total;
}

LaplacianMoments laplacian4_moments(std::span<const std::uint8_t> luma, int width, int height) {
  LaplacianMoments m;
  for (int y = 1; y + 1 < height; ++y) {
    for (int x = 1; x + 1 < width; ++x) {
      std::int64_t r = detail::laplacian4_at(luma.data(), width, x, y);
      m.sum += r;
      m.sum_squares += static_cast<std::uint64_t>(r * r);
      ++m.count;
    }
  }
  return m;
}

void box_downsample2(std::span<const std::uint8_t> src, int width, int height, int channels,
                     std::span<std::uint8_t> dst) {
  int ow = std::max(1, width / 2), oh = std::max(1, height / 2);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      detail::downsample_pixel(src.data(), width, height, channels, x, y,
                               dst.data() + (static_cast<std::size_t>(y) * ow + x) * channels);
    }
  }
}

void quantize_unorm16(std::span<const float> values, int components, std::span<const float> mins,
                      std::span<const float> extents, std::span<std::uint16_t> out) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    int c = static_cast<int>(i % static_cast<std::size_t>(components));
    out[i] = detail::quantize_one(values[i], mins[c], extents[c]);
  }
}

void cluster_keys(std::span<const Vec3f> positions, const GridSpec& grid, std::span<std::uint64_t> keys) {
  for (std::size_t i = 0; i < positions.size(); ++i) keys[i] = detail::key_of(positions[i], grid);
}

}  // namespace tirtha::kernels::serial
