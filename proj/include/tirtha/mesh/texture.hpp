#pragma once

#include "tirtha/mesh/mesh.hpp"

namespace tirtha::mesh {

/// Halves both sides with a 2x2 box filter until max(w, h) <= max_side.
/// Returns the input unchanged (including its encoded bytes) when it already fits.
TextureImage downsample_texture(const TextureImage& texture, int max_side);

/// The encoded JPEG for a texture, encoding it when no bytes are attached.
std::vector<std::uint8_t> texture_jpeg(const TextureImage& texture, int quality = 90);

}  // namespace tirtha::mesh
