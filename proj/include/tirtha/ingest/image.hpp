#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tirtha/ingest/exif.hpp"

namespace tirtha::ingest {

/// Interleaved 8-bit raster. channels is 3 (RGB) or 4 (RGBA).
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> pixels;

  Raster() = default;
  Raster(int w, int h, int ch = 3)
      : width(w), height(h), channels(ch), pixels(static_cast<std::size_t>(w) * h * ch, 0) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::uint8_t* at(int x, int y) { return pixels.data() + (static_cast<std::size_t>(y) * width + x) * channels; }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * channels;
  }
};

struct DecodedImage {
  Raster rgb;  // always 3 channels
  std::optional<ExifBlock> exif;
  std::string source_hash;  // sha256 of the encoded bytes

  int width() const { return rgb.width; }
  int height() const { return rgb.height; }
};

}  // namespace tirtha::ingest
