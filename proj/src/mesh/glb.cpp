#include "tirtha/mesh/glb.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <cstring>
#include <optional>

#include "tirtha/common/error.hpp"
#include "tirtha/ingest/jpeg.hpp"
#include "tirtha/mesh/texture.hpp"

namespace tirtha::mesh {
namespace {

using nlohmann::json;

constexpr int kByte = 5120;
constexpr int kUnsignedByte = 5121;
constexpr int kShort = 5122;
constexpr int kUnsignedShort = 5123;
constexpr int kUnsignedInt = 5125;
constexpr int kFloat = 5126;
constexpr int kArrayBuffer = 34962;
constexpr int kElementArrayBuffer = 34963;

class BinWriter {
 public:
  // Appends `bytes` as a new buffer view starting on a 4-byte boundary.
  int add_view(const void* data, std::size_t size, std::optional<int> stride, std::optional<int> target) {
    pad();
    json view = {{"buffer", 0}, {"byteOffset", bytes_.size()}, {"byteLength", size}};
    if (stride) view["byteStride"] = *stride;
    if (target) view["target"] = *target;
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + size);
    views_.push_back(std::move(view));
    return static_cast<int>(views_.size() - 1);
  }
  void pad() {
    while (bytes_.size() % 4) bytes_.push_back(0);
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }
  json& views() { return views_; }

 private:
  std::vector<std::uint8_t> bytes_;
  json views_ = json::array();
};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

std::int8_t snorm8(float v) { return static_cast<std::int8_t>(std::lround(std::clamp(v, -1.0f, 1.0f) * 127.0f)); }

std::uint16_t unorm16(float v) {
  return static_cast<std::uint16_t>(std::lround(std::clamp(double(v), 0.0, 1.0) * 65535.0));
}

}  // namespace

std::vector<std::uint8_t> write_glb(const TriangleMesh& mesh, const GlbOptions& options) {
  if (mesh.face_count() == 0 || mesh.vertex_count() == 0) throw Error(ErrorCode::EmptyMesh, "mesh has no triangles");
  mesh.validate();

  const std::size_t n = mesh.vertex_count();
  const Bounds bounds = mesh.bounds();
  const std::vector<Vec3f> normals = vertex_normals(mesh);
  BinWriter bin;
  json accessors = json::array();
  json attributes = json::object();
  json node = {{"mesh", 0}};

  if (options.quantize) {
    // zero-extent axes keep scale 1 so the node matrix stays invertible
    auto e = bounds.extent();
    const float ext[3] = {e.x > 0 ? e.x : 1.0f, e.y > 0 ? e.y : 1.0f, e.z > 0 ? e.z : 1.0f};
    const float mins[3] = {bounds.min.x, bounds.min.y, bounds.min.z};

    std::vector<std::uint16_t> q(n * 3);
    kernels::fast::quantize_unorm16({&mesh.positions[0].x, n * 3}, 3, mins, ext, q);
    std::vector<std::uint16_t> packed(n * 4, 0);
    std::array<std::uint16_t, 3> qmin{65535, 65535, 65535}, qmax{0, 0, 0};
    for (std::size_t v = 0; v < n; ++v) {
      for (int k = 0; k < 3; ++k) {
        packed[v * 4 + k] = q[v * 3 + k];
        qmin[k] = std::min(qmin[k], q[v * 3 + k]);
        qmax[k] = std::max(qmax[k], q[v * 3 + k]);
      }
    }
    int view = bin.add_view(packed.data(), packed.size() * 2, 8, kArrayBuffer);
    accessors.push_back({{"bufferView", view}, {"componentType", kUnsignedShort}, {"normalized", true},
                         {"count", n}, {"type", "VEC3"}, {"min", qmin}, {"max", qmax}});
    attributes["POSITION"] = accessors.size() - 1;
    node["translation"] = {mins[0], mins[1], mins[2]};
    node["scale"] = {ext[0], ext[1], ext[2]};

    // normals live in the quantized frame: the renderer maps them back with the inverse transpose
    std::vector<std::int8_t> nq(n * 4, 0);
    for (std::size_t v = 0; v < n; ++v) {
      double x = double(normals[v].x) * ext[0], y = double(normals[v].y) * ext[1], z = double(normals[v].z) * ext[2];
      double len = std::sqrt(x * x + y * y + z * z);
      if (len > 0) x /= len, y /= len, z /= len;
      nq[v * 4] = snorm8(float(x));
      nq[v * 4 + 1] = snorm8(float(y));
      nq[v * 4 + 2] = snorm8(float(z));
    }
    view = bin.add_view(nq.data(), nq.size(), 4, kArrayBuffer);
    accessors.push_back({{"bufferView", view}, {"componentType", kByte}, {"normalized", true},
                         {"count", n}, {"type", "VEC3"}});
    attributes["NORMAL"] = accessors.size() - 1;

    if (mesh.has_uvs()) {
      std::vector<std::uint16_t> uq(n * 2);
      for (std::size_t v = 0; v < n; ++v) {
        uq[v * 2] = unorm16(mesh.uvs[v].u);
        uq[v * 2 + 1] = unorm16(1.0f - mesh.uvs[v].v);
      }
      view = bin.add_view(uq.data(), uq.size() * 2, std::nullopt, kArrayBuffer);
      accessors.push_back({{"bufferView", view}, {"componentType", kUnsignedShort}, {"normalized", true},
                           {"count", n}, {"type", "VEC2"}});
      attributes["TEXCOORD_0"] = accessors.size() - 1;
    }
  } else {
    int view = bin.add_view(mesh.positions.data(), n * sizeof(Vec3f), std::nullopt, kArrayBuffer);
    accessors.push_back({{"bufferView", view}, {"componentType", kFloat}, {"count", n}, {"type", "VEC3"},
                         {"min", {bounds.min.x, bounds.min.y, bounds.min.z}},
                         {"max", {bounds.max.x, bounds.max.y, bounds.max.z}}});
    attributes["POSITION"] = accessors.size() - 1;
    view = bin.add_view(normals.data(), n * sizeof(Vec3f), std::nullopt, kArrayBuffer);
    accessors.push_back({{"bufferView", view}, {"componentType", kFloat}, {"count", n}, {"type", "VEC3"}});
    attributes["NORMAL"] = accessors.size() - 1;
    if (mesh.has_uvs()) {
      std::vector<float> uv(n * 2);
      for (std::size_t v = 0; v < n; ++v) {
        uv[v * 2] = mesh.uvs[v].u;
        uv[v * 2 + 1] = 1.0f - mesh.uvs[v].v;
      }
      view = bin.add_view(uv.data(), uv.size() * sizeof(float), std::nullopt, kArrayBuffer);
      accessors.push_back({{"bufferView", view}, {"componentType", kFloat}, {"count", n}, {"type", "VEC2"}});
      attributes["TEXCOORD_0"] = accessors.size() - 1;
    }
  }

  int index_view;
  int index_type;
  if (n <= 65535) {
    std::vector<std::uint16_t> idx(mesh.indices.begin(), mesh.indices.end());
    index_view = bin.add_view(idx.data(), idx.size() * 2, std::nullopt, kElementArrayBuffer);
    index_type = kUnsignedShort;
  } else {
    index_view = bin.add_view(mesh.indices.data(), mesh.indices.size() * 4, std::nullopt, kElementArrayBuffer);
    index_type = kUnsignedInt;
  }
  accessors.push_back({{"bufferView", index_view}, {"componentType", index_type}, {"count", mesh.indices.size()},
                       {"type", "SCALAR"}});
  json primitive = {{"attributes", attributes}, {"indices", accessors.size() - 1}, {"mode", 4}};

  json doc = {{"asset", {{"version", "2.0"}, {"generator", "tirtha"}}},
              {"scene", 0},
              {"scenes", {{{"nodes", {0}}}}},
              {"nodes", {node}}};

  if (mesh.texture) {
    auto jpeg = texture_jpeg(*mesh.texture, options.jpeg_quality);
    int view = bin.add_view(jpeg.data(), jpeg.size(), std::nullopt, std::nullopt);
    doc["images"] = {{{"bufferView", view}, {"mimeType", "image/jpeg"}}};
    doc["samplers"] = {{{"magFilter", 9729}, {"minFilter", 9987}, {"wrapS", 10497}, {"wrapT", 10497}}};
    doc["textures"] = {{{"sampler", 0}, {"source", 0}}};
    doc["materials"] = {{{"pbrMetallicRoughness",
                          {{"baseColorTexture", {{"index", 0}}}, {"metallicFactor", 0.0}, {"roughnessFactor", 1.0}}}}};
    primitive["material"] = 0;
  }
  bin.pad();

  doc["meshes"] = {{{"primitives", {primitive}}}};
  doc["accessors"] = accessors;
  doc["bufferViews"] = bin.views();
  doc["buffers"] = {{{"byteLength", bin.bytes().size()}}};
  if (options.quantize) {
    doc["extensionsUsed"] = {"KHR_mesh_quantization"};
    doc["extensionsRequired"] = {"KHR_mesh_quantization"};
  }

  std::string text = doc.dump();
  while (text.size() % 4) text.push_back(' ');

  std::vector<std::uint8_t> out;
  const std::size_t total = 12 + 8 + text.size() + 8 + bin.bytes().size();
  out.reserve(total);
  put_u32(out, kGlbMagic);
  put_u32(out, kGlbVersion);
  put_u32(out, static_cast<std::uint32_t>(total));
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  put_u32(out, kChunkJson);
  out.insert(out.end(), text.begin(), text.end());
  put_u32(out, static_cast<std::uint32_t>(bin.bytes().size()));
  put_u32(out, kChunkBin);
  out.insert(out.end(), bin.bytes().begin(), bin.bytes().end());
  return out;
}

GlbContainer parse_glb(std::span<const std::uint8_t> bytes) {
  auto fail = [](const std::string& why) { return Error(ErrorCode::Malformed, "glb: " + why); };
  if (bytes.size() < 20) throw fail("shorter than header");
  if (get_u32(&bytes[0]) != kGlbMagic) throw fail("bad magic");
  GlbContainer c;
  c.version = get_u32(&bytes[4]);
  c.declared_length = get_u32(&bytes[8]);
  if (c.version != kGlbVersion) throw fail("unsupported version " + std::to_string(c.version));
  if (c.declared_length != bytes.size()) throw fail("length field does not match byte length");
  if (c.declared_length % 4) throw fail("length not 4-byte aligned");

  c.json_chunk_length = get_u32(&bytes[12]);
  if (get_u32(&bytes[16]) != kChunkJson) throw fail("first chunk is not JSON");
  if (c.json_chunk_length % 4 || 20ull + c.json_chunk_length > bytes.size()) throw fail("bad JSON chunk length");
  std::string text(reinterpret_cast<const char*>(&bytes[20]), c.json_chunk_length);
  try {
    c.json = json::parse(text);
  } catch (const json::exception& e) {
    throw fail(std::string("JSON chunk: ") + e.what());
  }

  std::size_t pos = 20 + c.json_chunk_length;
  if (pos < bytes.size()) {
    if (pos + 8 > bytes.size()) throw fail("truncated BIN chunk header");
    c.bin_chunk_length = get_u32(&bytes[pos]);
    if (get_u32(&bytes[pos + 4]) != kChunkBin) throw fail("second chunk is not BIN");
    if (c.bin_chunk_length % 4 || pos + 8 + c.bin_chunk_length != bytes.size()) throw fail("bad BIN chunk length");
    c.bin.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos + 8), bytes.end());
  }
  return c;
}

namespace {

int component_count(const std::string& type) {
  if (type == "SCALAR") return 1;
  if (type == "VEC2") return 2;
  if (type == "VEC3") return 3;
  if (type == "VEC4") return 4;
  throw Error(ErrorCode::Malformed, "glb: unsupported accessor type " + type);
}

int component_size(int type) {
  switch (type) {
    case kByte:
    case kUnsignedByte: return 1;
    case kShort:
    case kUnsignedShort: return 2;
    case kUnsignedInt:
    case kFloat: return 4;
  }
  throw Error(ErrorCode::Malformed, "glb: unknown component type");
}

// Reads accessor `index` into doubles, normalized integers mapped per the glTF rules.
std::vector<double> read_accessor(const GlbContainer& c, std::size_t index, int& components) {
  const json& acc = c.json.at("accessors").at(index);
  const json& view = c.json.at("bufferViews").at(acc.at("bufferView").get<std::size_t>());
  const int type = acc.at("componentType").get<int>();
  components = component_count(acc.at("type").get<std::string>());
  const std::size_t count = acc.at("count").get<std::size_t>();
  const bool normalized = acc.value("normalized", false);
  const int csize = component_size(type);
  const std::size_t stride = view.value("byteStride", std::size_t(csize * components));
  const std::size_t base = view.value("byteOffset", std::size_t(0)) + acc.value("byteOffset", std::size_t(0));
  const std::size_t view_end = view.value("byteOffset", std::size_t(0)) + view.at("byteLength").get<std::size_t>();
  if (view_end > c.bin.size()) throw Error(ErrorCode::Malformed, "glb: buffer view past end of BIN chunk");
  if (count > 0 && base + (count - 1) * stride + std::size_t(csize) * components > view_end) {
    throw Error(ErrorCode::Malformed, "glb: accessor past end of buffer view");
  }

  std::vector<double> out(count * components);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t* p = c.bin.data() + base + i * stride;
    for (int k = 0; k < components; ++k, p += csize) {
      double v;
      switch (type) {
        case kByte: {
          auto x = static_cast<std::int8_t>(*p);
          v = normalized ? std::max(x / 127.0, -1.0) : x;
          break;
        }
        case kUnsignedByte: v = normalized ? *p / 255.0 : *p; break;
        case kShort: {
          std::int16_t x;
          std::memcpy(&x, p, 2);
          v = normalized ? std::max(x / 32767.0, -1.0) : x;
          break;
        }
        case kUnsignedShort: {
          std::uint16_t x;
          std::memcpy(&x, p, 2);
          v = normalized ? x / 65535.0 : x;
          break;
        }
        case kUnsignedInt: {
          std::uint32_t x;
          std::memcpy(&x, p, 4);
          v = x;
          break;
        }
        default: {
          float x;
          std::memcpy(&x, p, 4);
          v = x;
        }
      }
      out[i * components + k] = v;
    }
  }
  return out;
}

}  // namespace

GlbMesh read_glb(std::span<const std::uint8_t> bytes) {
  GlbContainer c = parse_glb(bytes);
  GlbMesh out;
  try {
    const json& prim = c.json.at("meshes").at(0).at("primitives").at(0);
    const json& attrs = prim.at("attributes");
    std::array<double, 3> t{0, 0, 0}, s{1, 1, 1};
    if (c.json.contains("nodes")) {
      for (const auto& node : c.json["nodes"]) {
        if (node.value("mesh", -1) != 0) continue;
        if (node.contains("translation")) t = node["translation"].get<std::array<double, 3>>();
        if (node.contains("scale")) s = node["scale"].get<std::array<double, 3>>();
        break;
      }
    }
    int comps = 0;
    auto pos = read_accessor(c, attrs.at("POSITION").get<std::size_t>(), comps);
    if (comps != 3) throw Error(ErrorCode::Malformed, "glb: POSITION must be VEC3");
    out.quantized = c.json.at("accessors").at(attrs["POSITION"].get<std::size_t>()).at("componentType") != kFloat;
    const std::size_t n = pos.size() / 3;
    out.mesh.positions.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
      out.mesh.positions[v] = {float(t[0] + s[0] * pos[v * 3]), float(t[1] + s[1] * pos[v * 3 + 1]),
                               float(t[2] + s[2] * pos[v * 3 + 2])};
    }
    if (attrs.contains("NORMAL")) {
      auto nrm = read_accessor(c, attrs["NORMAL"].get<std::size_t>(), comps);
      out.normals.resize(n);
      for (std::size_t v = 0; v < n && v * 3 + 2 < nrm.size(); ++v) {
        double x = nrm[v * 3] / s[0], y = nrm[v * 3 + 1] / s[1], z = nrm[v * 3 + 2] / s[2];
        double len = std::sqrt(x * x + y * y + z * z);
        out.normals[v] = len > 0 ? Vec3f{float(x / len), float(y / len), float(z / len)} : Vec3f{0, 0, 1};
      }
    }
    if (attrs.contains("TEXCOORD_0")) {
      auto uv = read_accessor(c, attrs["TEXCOORD_0"].get<std::size_t>(), comps);
      out.mesh.uvs.resize(n);
      for (std::size_t v = 0; v < n; ++v) out.mesh.uvs[v] = {float(uv[v * 2]), float(1.0 - uv[v * 2 + 1])};
    }
    auto idx = read_accessor(c, prim.at("indices").get<std::size_t>(), comps);
    out.mesh.indices.reserve(idx.size());
    for (double i : idx) out.mesh.indices.push_back(static_cast<std::uint32_t>(i));

    if (prim.contains("material") && c.json.contains("images")) {
      const json& image = c.json["images"].at(0);
      const json& view = c.json.at("bufferViews").at(image.at("bufferView").get<std::size_t>());
      std::size_t off = view.value("byteOffset", std::size_t(0)), len = view.at("byteLength").get<std::size_t>();
      if (off + len > c.bin.size()) throw Error(ErrorCode::Malformed, "glb: image view past end of BIN chunk");
      TextureImage tex;
      tex.jpeg.assign(c.bin.begin() + static_cast<std::ptrdiff_t>(off),
                      c.bin.begin() + static_cast<std::ptrdiff_t>(off + len));
      ingest::DecodeOptions opts;
      opts.min_short_side = 1;
      tex.pixels = ingest::decode_and_validate(tex.jpeg, opts).rgb;
      out.mesh.texture = std::move(tex);
      out.has_texture = true;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Malformed, std::string("glb: ") + e.what());
  }
  out.mesh.validate();
  return out;
}

}  // namespace tirtha::mesh
