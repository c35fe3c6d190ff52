#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "tirtha/kernels/kernels.hpp"

namespace tirtha::kernels::detail {

inline std::uint8_t luma_of(const std::uint8_t* p) {
  return static_cast<std::uint8_t>((299u * p[0] + 587u * p[1] + 114u * p[2] + 500u) / 1000u);
}

inline int laplacian9_at(const std::uint8_t* l, int w, int x, int y) {
  const std::uint8_t* r0 = l + static_cast<std::ptrdiff_t>(y - 1) * w + x;
  const std::uint8_t* r1 = r0 + w;
  const std::uint8_t* r2 = r1 + w;
  return (r0[-1] - 2 * r0[0] + r0[1]) - 2 * (r1[-1] - 2 * r1[0] + r1[1]) + (r2[-1] - 2 * r2[0] + r2[1]);
}

inline int laplacian4_at(const std::uint8_t* l, int w, int x, int y) {
  const std::uint8_t* c = l + static_cast<std::ptrdiff_t>(y) * w + x;
  return c[-w] + c[w] + c[-1] + c[1] - 4 * c[0];
}

inline void downsample_pixel(const std::uint8_t* src, int w, int h, int ch, int ox, int oy, std::uint8_t* out) {
  int x0 = std::min(2 * ox, w - 1), x1 = std::min(2 * ox + 1, w - 1);
  int y0 = std::min(2 * oy, h - 1), y1 = std::min(2 * oy + 1, h - 1);
  for (int c = 0; c < ch; ++c) {
    unsigned a = src[(static_cast<std::size_t>(y0) * w + x0) * ch + c];
    unsigned b = src[(static_cast<std::size_t>(y0) * w + x1) * ch + c];
    unsigned d = src[(static_cast<std::size_t>(y1) * w + x0) * ch + c];
    unsigned e = src[(static_cast<std::size_t>(y1) * w + x1) * ch + c];
    out[c] = static_cast<std::uint8_t>((a + b + d + e + 2) / 4);
  }
}

inline std::uint16_t quantize_one(float v, float mn, float extent) {
  if (!(extent > 0.0f)) return 0;
  double t = (static_cast<double>(v) - mn) / extent * 65535.0;
  t = std::clamp(std::round(t), 0.0, 65535.0);
  return static_cast<std::uint16_t>(t);
}

inline std::uint64_t key_of(const Vec3f& p, const GridSpec& g) {
  auto axis = [&](float v, float o, std::uint32_t dim) -> std::uint64_t {
    double i = std::floor((static_cast<double>(v) - o) / g.cell);
    if (i < 0) i = 0;
    if (i >= dim) i = dim - 1;
    return static_cast<std::uint64_t>(i);
  };
  return (axis(p.x, g.origin.x, g.dims[0]) << 42) | (axis(p.y, g.origin.y, g.dims[1]) << 21) |
         axis(p.z, g.origin.z, g.dims[2]);
}

}  // namespace tirtha::kernels::detail
