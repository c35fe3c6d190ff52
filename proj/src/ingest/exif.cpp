#include "tirtha/ingest/exif.hpp"

#include <algorithm>
#include <cstring>

namespace tirtha::ingest {
namespace {

constexpr std::uint16_t kTagMake = 0x010F;
constexpr std::uint16_t kTagModel = 0x0110;
constexpr std::uint16_t kTagOrientation = 0x0112;
constexpr std::uint16_t kTagDateTime = 0x0132;
constexpr std::uint16_t kTagExifIfd = 0x8769;
constexpr std::uint16_t kTagDateTimeOriginal = 0x9003;

constexpr std::uint16_t kTypeAscii = 2;
constexpr std::uint16_t kTypeShort = 3;
constexpr std::uint16_t kTypeLong = 4;

class TiffReader {
 public:
  TiffReader(std::span<const std::uint8_t> tiff, bool big_endian) : tiff_(tiff), be_(big_endian) {}

  bool u16(std::size_t off, std::uint16_t& out) const {
    if (off + 2 > tiff_.size()) return false;
    out = be_ ? static_cast<std::uint16_t>(tiff_[off] << 8 | tiff_[off + 1])
              : static_cast<std::uint16_t>(tiff_[off + 1] << 8 | tiff_[off]);
    return true;
  }
  bool u32(std::size_t off, std::uint32_t& out) const {
    if (off + 4 > tiff_.size()) return false;
    const auto* p = tiff_.data() + off;
    out = be_ ? (std::uint32_t(p[0]) << 24 | std::uint32_t(p[1]) << 16 | std::uint32_t(p[2]) << 8 | p[3])
              : (std::uint32_t(p[3]) << 24 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[1]) << 8 | p[0]);
    return true;
  }
  std::size_t size() const { return tiff_.size(); }
  const std::uint8_t* data() const { return tiff_.data(); }

 private:
  std::span<const std::uint8_t> tiff_;
  bool be_;
};

struct Entry {
  std::uint16_t tag, type;
  std::uint32_t count;
  std::size_t value_offset;  // offset of the value field inside the entry
};

// Walks one IFD; false on any out-of-bounds structure.
template <class Fn>
bool walk_ifd(const TiffReader& r, std::uint32_t ifd_offset, Fn&& fn) {
  std::uint16_t n = 0;
  if (!r.u16(ifd_offset, n)) return false;
  if (ifd_offset + 2 + std::size_t(n) * 12 > r.size()) return false;
  for (std::uint16_t i = 0; i < n; ++i) {
    std::size_t e = ifd_offset + 2 + std::size_t(i) * 12;
    Entry entry{};
    std::uint32_t count = 0;
    if (!r.u16(e, entry.tag) || !r.u16(e + 2, entry.type) || !r.u32(e + 4, count)) return false;
    entry.count = count;
    entry.value_offset = e + 8;
    if (!fn(entry)) return false;
  }
  return true;
}

bool read_ascii(const TiffReader& r, const Entry& e, std::optional<std::string>& out) {
  if (e.type != kTypeAscii) return true;  // wrong type: ignore the tag
  std::size_t start = e.value_offset;
  if (e.count > 4) {
    std::uint32_t off = 0;
    if (!r.u32(e.value_offset, off)) return false;
    start = off;
  }
  if (start + e.count > r.size()) return false;
  std::string s(reinterpret_cast<const char*>(r.data() + start), e.count);
  while (!s.empty() && s.back() == '\0') s.pop_back();
  out = s;
  return true;
}

void put16(std::vector<std::uint8_t>& v, std::uint16_t x) {
  v.push_back(static_cast<std::uint8_t>(x & 0xFF));
  v.push_back(static_cast<std::uint8_t>(x >> 8));
}
void put32(std::vector<std::uint8_t>& v, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) v.push_back(static_cast<std::uint8_t>((x >> (8 * i)) & 0xFF));
}

}  // namespace

std::optional<ExifBlock> parse_exif(std::span<const std::uint8_t> payload) {
  static constexpr std::uint8_t kHeader[] = {'E', 'x', 'i', 'f', 0, 0};
  if (payload.size() < 6 + 8 || std::memcmp(payload.data(), kHeader, 6) != 0) return std::nullopt;
  auto tiff = payload.subspan(6);
  bool be;
  if (tiff[0] == 'I' && tiff[1] == 'I') be = false;
  else if (tiff[0] == 'M' && tiff[1] == 'M') be = true;
  else return std::nullopt;

  TiffReader r(tiff, be);
  std::uint16_t magic = 0;
  std::uint32_t ifd0 = 0;
  if (!r.u16(2, magic) || magic != 42 || !r.u32(4, ifd0)) return std::nullopt;

  ExifBlock block;
  block.big_endian = be;
  block.raw.assign(payload.begin(), payload.end());
  std::optional<std::uint32_t> exif_ifd;

  bool ok = walk_ifd(r, ifd0, [&](const Entry& e) {
    switch (e.tag) {
      case kTagMake: return read_ascii(r, e, block.make);
      case kTagModel: return read_ascii(r, e, block.model);
      case kTagDateTime: return read_ascii(r, e, block.date_time);
      case kTagOrientation: {
        std::uint16_t v = 0;
        if (e.type == kTypeShort && r.u16(e.value_offset, v)) block.orientation = v;
        return true;
      }
      case kTagExifIfd: {
        std::uint32_t v = 0;
        if (e.type == kTypeLong && r.u32(e.value_offset, v)) exif_ifd = v;
        return true;
      }
      default: return true;
    }
  });
  if (!ok) return std::nullopt;
  if (exif_ifd) {
    ok = walk_ifd(r, *exif_ifd, [&](const Entry& e) {
      if (e.tag == kTagDateTimeOriginal) return read_ascii(r, e, block.date_time_original);
      return true;
    });
    if (!ok) return std::nullopt;
  }
  return block;
}

std::vector<std::uint8_t> build_exif_payload(const ExifFields& fields) {
  struct Ascii {
    std::uint16_t tag;
    std::string value;
  };
  std::vector<Ascii> strings;
  if (fields.make) strings.push_back({kTagMake, *fields.make});
  if (fields.model) strings.push_back({kTagModel, *fields.model});
  if (fields.date_time) strings.push_back({kTagDateTime, *fields.date_time});

  // entries must be sorted by tag
  std::vector<std::uint16_t> order;
  for (const auto& s : strings) order.push_back(s.tag);
  if (fields.orientation) order.push_back(kTagOrientation);
  std::sort(order.begin(), order.end());

  const std::uint32_t ifd_offset = 8;
  const std::uint32_t n = static_cast<std::uint32_t>(order.size());
  std::uint32_t data_offset = ifd_offset + 2 + n * 12 + 4;

  std::vector<std::uint8_t> tiff = {'I', 'I'};
  put16(tiff, 42);
  put32(tiff, ifd_offset);
  put16(tiff, static_cast<std::uint16_t>(n));
  std::vector<std::uint8_t> data;
  for (auto tag : order) {
    put16(tiff, tag);
    if (tag == kTagOrientation) {
      put16(tiff, kTypeShort);
      put32(tiff, 1);
      put16(tiff, static_cast<std::uint16_t>(*fields.orientation));
      put16(tiff, 0);
      continue;
    }
    const auto& s = *std::find_if(strings.begin(), strings.end(), [&](const Ascii& a) { return a.tag == tag; });
    std::string value = s.value;
    value.push_back('\0');
    put16(tiff, kTypeAscii);
    put32(tiff, static_cast<std::uint32_t>(value.size()));
    if (value.size() <= 4) {
      for (std::size_t i = 0; i < 4; ++i) tiff.push_back(i < value.size() ? static_cast<std::uint8_t>(value[i]) : 0);
    } else {
      put32(tiff, data_offset + static_cast<std::uint32_t>(data.size()));
      data.insert(data.end(), value.begin(), value.end());
      if (data.size() % 2) data.push_back(0);
    }
  }
  put32(tiff, 0);  // no IFD1
  tiff.insert(tiff.end(), data.begin(), data.end());

  std::vector<std::uint8_t> payload = {'E', 'x', 'i', 'f', 0, 0};
  payload.insert(payload.end(), tiff.begin(), tiff.end());
  return payload;
}

}  // namespace tirtha::ingest
