#include "tirtha/mesh/texture.hpp"

#include <algorithm>

#include "tirtha/common/error.hpp"
#include "tirtha/ingest/jpeg.hpp"

namespace tirtha::mesh {

TextureImage downsample_texture(const TextureImage& texture, int max_side) {
  if (max_side < 1) throw Error(ErrorCode::Validation, "texture side must be positive");
  const auto& src = texture.pixels;
  if (std::max(src.width, src.height) <= max_side) return texture;

  ingest::Raster current = src;
  while (std::max(current.width, current.height) > max_side) {
    ingest::Raster half(std::max(1, current.width / 2), std::max(1, current.height / 2), current.channels);
    kernels::fast::box_downsample2(current.pixels, current.width, current.height, current.channels, half.pixels);
    current = std::move(half);
  }
  return TextureImage{std::move(current), {}};
}

std::vector<std::uint8_t> texture_jpeg(const TextureImage& texture, int quality) {
  if (!texture.jpeg.empty()) return texture.jpeg;
  return ingest::encode_jpeg(texture.pixels, {quality, {}});
}

}  // namespace tirtha::mesh
