#include "tirtha/ingest/jpeg.hpp"

#include <csetjmp>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <jpeglib.h>

#include "tirtha/common/digest.hpp"
#include "tirtha/common/error.hpp"

namespace tirtha::ingest {
namespace {

struct ErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void on_error(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<ErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// libjpeg reports premature end of data and bad Huffman codes as warnings and
// pads the scan with gray; an upload like that is damaged, so fail instead.
void on_message(j_common_ptr cinfo, int level) {
  if (level < 0) on_error(cinfo);
}

void silent_output(j_common_ptr) {}

std::uint16_t be16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] << 8 | p[1]); }

bool is_sof(std::uint8_t m) {
  return m >= 0xC0 && m <= 0xCF && m != 0xC4 && m != 0xC8 && m != 0xCC;
}

}  // namespace

JpegInfo probe_jpeg(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 0xFF || bytes[1] != 0xD8) {
    throw Error(ErrorCode::UnsupportedFormat, "not a JPEG stream");
  }
  if (bytes.size() < 4 || bytes[2] != 0xFF) throw Error(ErrorCode::Corrupt, "truncated after SOI");
  JpegInfo info;
  bool seen_exif = false;
  std::size_t pos = 2;
  while (true) {
    if (pos + 4 > bytes.size()) throw Error(ErrorCode::Corrupt, "truncated marker segment");
    if (bytes[pos] != 0xFF) throw Error(ErrorCode::Corrupt, "expected marker at offset " + std::to_string(pos));
    std::uint8_t marker = bytes[pos + 1];
    if (marker == 0xFF) {  // fill byte
      ++pos;
      continue;
    }
    if (marker == 0xD8 || marker == 0xD9 || (marker >= 0xD0 && marker <= 0xD7) || marker == 0x01) {
      throw Error(ErrorCode::Corrupt, "unexpected standalone marker before scan");
    }
    std::uint16_t len = be16(&bytes[pos + 2]);
    if (len < 2 || pos + 2 + len > bytes.size()) throw Error(ErrorCode::Corrupt, "marker segment overruns stream");
    const std::uint8_t* seg = &bytes[pos + 4];
    std::size_t seg_len = len - 2u;

    if (marker == 0xE1 && !seen_exif) {
      auto block = parse_exif({seg, seg_len});
      if (block) {
        info.exif = std::move(block);
        seen_exif = true;
      }
    } else if (is_sof(marker)) {
      if (seg_len < 6) throw Error(ErrorCode::Corrupt, "short SOF segment");
      info.height = be16(seg + 1);
      info.width = be16(seg + 3);
      info.components = seg[5];
    } else if (marker == 0xDA) {
      if (info.width == 0) throw Error(ErrorCode::Corrupt, "scan before frame header");
      break;
    }
    pos += 2 + len;
  }
  if (info.width <= 0 || info.height <= 0) throw Error(ErrorCode::Corrupt, "frame has zero dimension");
  return info;
}

DecodedImage decode_and_validate(std::span<const std::uint8_t> bytes, const DecodeOptions& options) {
  JpegInfo info = probe_jpeg(bytes);
  if (bytes.size() < 4 || bytes[bytes.size() - 2] != 0xFF || bytes[bytes.size() - 1] != 0xD9) {
    throw Error(ErrorCode::Corrupt, "missing end-of-image marker");
  }
  if (std::min(info.width, info.height) < options.min_short_side) {
    throw Error(ErrorCode::TooSmall, std::to_string(info.width) + "x" + std::to_string(info.height) +
                                         " is below the minimum short side of " +
                                         std::to_string(options.min_short_side));
  }

  DecodedImage out;
  jpeg_decompress_struct cinfo{};
  ErrorManager err{};
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = on_error;
  err.pub.emit_message = on_message;
  err.pub.output_message = silent_output;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(ErrorCode::Corrupt, std::string("jpeg decode failed: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);

  out.rgb = Raster(static_cast<int>(cinfo.output_width), static_cast<int>(cinfo.output_height), 3);
  const std::size_t stride = static_cast<std::size_t>(cinfo.output_width) * 3;
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.rgb.pixels.data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);

  out.exif = std::move(info.exif);
  out.source_hash = sha256_hex(bytes);
  return out;
}

std::vector<std::uint8_t> encode_jpeg(const Raster& rgb, const EncodeOptions& options) {
  if (rgb.channels != 3 || rgb.width <= 0 || rgb.height <= 0) {
    throw Error(ErrorCode::Validation, "encode_jpeg expects a non-empty RGB raster");
  }
  jpeg_compress_struct cinfo{};
  ErrorManager err{};
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = on_error;
  err.pub.output_message = silent_output;
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    throw Error(ErrorCode::Corrupt, std::string("jpeg encode failed: ") + err.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(rgb.width);
  cinfo.image_height = static_cast<JDIMENSION>(rgb.height);
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, options.quality, TRUE);
  cinfo.write_JFIF_header = options.app1.empty() ? TRUE : FALSE;
  jpeg_start_compress(&cinfo, TRUE);
  if (!options.app1.empty()) {
    jpeg_write_marker(&cinfo, JPEG_APP0 + 1, options.app1.data(), static_cast<unsigned>(options.app1.size()));
  }
  const std::size_t stride = static_cast<std::size_t>(rgb.width) * 3;
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<std::uint8_t*>(rgb.pixels.data() + cinfo.next_scanline * stride);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  std::vector<std::uint8_t> out(buffer, buffer + size);
  std::free(buffer);
  return out;
}

}  // namespace tirtha::ingest
