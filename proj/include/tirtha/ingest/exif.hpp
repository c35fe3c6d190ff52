#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tirtha::ingest {

/// EXIF tags read for validation; everything else in the segment is kept opaque.
struct ExifBlock {
  std::optional<std::string> make;
  std::optional<std::string> model;
  std::optional<std::string> date_time;           // IFD0 DateTime
  std::optional<std::string> date_time_original;  // Exif sub-IFD
  std::optional<int> orientation;
  bool big_endian = false;
  std::vector<std::uint8_t> raw;  // APP1 payload starting at "Exif\0\0"
};

/// Parses an APP1 payload ("Exif\0\0" + TIFF structure). Returns nullopt when
/// the payload is not EXIF or its TIFF structure is inconsistent.
std::optional<ExifBlock> parse_exif(std::span<const std::uint8_t> app1_payload);

struct ExifFields {
  std::optional<std::string> make;
  std::optional<std::string> model;
  std::optional<std::string> date_time;
  std::optional<int> orientation;
};

/// Builds a little-endian APP1 payload holding IFD0 with the given tags.
std::vector<std::uint8_t> build_exif_payload(const ExifFields& fields);

}  // namespace tirtha::ingest
