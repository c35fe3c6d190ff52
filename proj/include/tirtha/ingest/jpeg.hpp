#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tirtha/ingest/image.hpp"

namespace tirtha::ingest {

struct DecodeOptions {
  int min_short_side = 1080;
};

/// Validates and decodes a JPEG upload.
///
/// Throws UNSUPPORTED_FORMAT for anything not starting with the JPEG SOI
/// marker, CORRUPT for truncated or damaged marker/scan data (including
/// libjpeg recoverable warnings), TOO_SMALL below the configured short side.
DecodedImage decode_and_validate(std::span<const std::uint8_t> bytes, const DecodeOptions& options = {});

/// Dimensions from the SOF marker without decoding the scan.
struct JpegInfo {
  int width = 0;
  int height = 0;
  int components = 0;
  std::optional<ExifBlock> exif;
};
JpegInfo probe_jpeg(std::span<const std::uint8_t> bytes);

struct EncodeOptions {
  int quality = 90;
  /// APP1 payload written right after SOI (e.g. build_exif_payload output).
  std::vector<std::uint8_t> app1;
};

/// Encodes an RGB (3-channel) raster.
std::vector<std::uint8_t> encode_jpeg(const Raster& rgb, const EncodeOptions& options = {});

}  // namespace tirtha::ingest
