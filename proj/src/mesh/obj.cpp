#include "tirtha/mesh/obj.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <map>

#include "tirtha/common/error.hpp"
#include "tirtha/common/io.hpp"
#include "tirtha/ingest/jpeg.hpp"

namespace tirtha::mesh {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string_view next_token(std::string_view& s) {
  s = trim(s);
  std::size_t end = 0;
  while (end < s.size() && s[end] != ' ' && s[end] != '\t') ++end;
  auto tok = s.substr(0, end);
  s.remove_prefix(end);
  return tok;
}

[[noreturn]] void malformed(std::size_t line, std::string_view why) {
  throw Error(ErrorCode::MalformedLine, "line " + std::to_string(line) + ": " + std::string(why));
}

float parse_float(std::string_view tok, std::size_t line) {
  float v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) malformed(line, "bad number '" + std::string(tok) + "'");
  return v;
}

long parse_index(std::string_view tok, std::size_t line) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || v == 0) {
    malformed(line, "bad index '" + std::string(tok) + "'");
  }
  return v;
}

// OBJ index (1-based or negative relative) to 0-based.
std::size_t resolve(long idx, std::size_t count, std::size_t line, const char* what) {
  long r = idx > 0 ? idx - 1 : static_cast<long>(count) + idx;
  if (r < 0 || static_cast<std::size_t>(r) >= count) {
    throw Error(ErrorCode::IndexOutOfRange, "line " + std::to_string(line) + ": " + what + " index " +
                                                std::to_string(idx) + " out of range (" + std::to_string(count) +
                                                " defined)");
  }
  return static_cast<std::size_t>(r);
}

struct Corner {
  std::size_t v;
  long vt;  // -1 when absent
};

}  // namespace

ObjDocument parse_obj(std::string_view text) {
  ObjDocument doc;
  std::vector<Vec3f> positions;
  std::vector<Vec2f> texcoords;
  std::vector<std::array<Corner, 3>> faces;

  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    std::string_view rest = line;
    auto keyword = next_token(rest);
    if (keyword.empty()) continue;

    if (keyword == "v") {
      Vec3f p;
      auto x = next_token(rest), y = next_token(rest), z = next_token(rest);
      if (z.empty()) malformed(line_no, "vertex needs three coordinates");
      p = {parse_float(x, line_no), parse_float(y, line_no), parse_float(z, line_no)};
      positions.push_back(p);  // optional w / vertex colours ignored
    } else if (keyword == "vt") {
      auto u = next_token(rest), v = next_token(rest);
      if (u.empty()) malformed(line_no, "texture coordinate needs at least one value");
      texcoords.push_back({parse_float(u, line_no), v.empty() ? 0.0f : parse_float(v, line_no)});
    } else if (keyword == "f") {
      std::vector<Corner> poly;
      for (auto tok = next_token(rest); !tok.empty(); tok = next_token(rest)) {
        auto s1 = tok.find('/');
        Corner c{resolve(parse_index(tok.substr(0, s1), line_no), positions.size(), line_no, "vertex"), -1};
        if (s1 != std::string_view::npos) {
          auto after = tok.substr(s1 + 1);
          auto s2 = after.find('/');
          auto vt = after.substr(0, s2);
          if (!vt.empty()) {
            c.vt = static_cast<long>(resolve(parse_index(vt, line_no), texcoords.size(), line_no, "texcoord"));
          }
          if (s2 != std::string_view::npos) {
            auto vn = after.substr(s2 + 1);
            if (vn.empty() || vn.find('/') != std::string_view::npos) malformed(line_no, "bad face corner");
            parse_index(vn, line_no);  // normals are regenerated downstream
          } else if (vt.empty()) {
            malformed(line_no, "bad face corner");
          }
        }
        poly.push_back(c);
      }
      if (poly.size() < 3) malformed(line_no, "face needs at least three corners");
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) faces.push_back({poly[0], poly[k], poly[k + 1]});
    } else if (keyword == "mtllib") {
      auto name = trim(rest);
      if (name.empty()) malformed(line_no, "mtllib without file name");
      if (!doc.mtllib) doc.mtllib = std::string(name);
    } else if (keyword == "usemtl") {
      auto name = trim(rest);
      if (name.empty()) malformed(line_no, "usemtl without material name");
      if (!doc.material) doc.material = std::string(name);
    } else if (keyword == "vn" || keyword == "vp" || keyword == "o" || keyword == "g" || keyword == "s" ||
               keyword == "l" || keyword == "p") {
      continue;
    } else {
      malformed(line_no, "unknown statement '" + std::string(keyword) + "'");
    }
  }

  TriangleMesh& mesh = doc.mesh;
  mesh.positions = positions;
  bool any_uv = false;
  for (const auto& f : faces)
    for (const auto& c : f) any_uv |= c.vt >= 0;

  if (!any_uv) {
    mesh.indices.reserve(faces.size() * 3);
    for (const auto& f : faces)
      for (const auto& c : f) mesh.indices.push_back(static_cast<std::uint32_t>(c.v));
    return doc;
  }

  mesh.uvs.assign(positions.size(), Vec2f{});
  std::vector<long> slot_uv(positions.size(), -2);  // -2: slot unused so far
  std::map<std::pair<std::size_t, long>, std::uint32_t> extra;
  for (const auto& f : faces) {
    for (const auto& c : f) {
      std::uint32_t index;
      if (slot_uv[c.v] == -2 || slot_uv[c.v] == c.vt || c.vt < 0) {
        if (slot_uv[c.v] == -2) {
          slot_uv[c.v] = c.vt;
          if (c.vt >= 0) mesh.uvs[c.v] = texcoords[static_cast<std::size_t>(c.vt)];
        }
        index = static_cast<std::uint32_t>(c.v);
      } else {
        auto [it, inserted] = extra.try_emplace({c.v, c.vt}, static_cast<std::uint32_t>(mesh.positions.size()));
        if (inserted) {
          mesh.positions.push_back(positions[c.v]);
          mesh.uvs.push_back(texcoords[static_cast<std::size_t>(c.vt)]);
        }
        index = it->second;
      }
      mesh.indices.push_back(index);
    }
  }
  return doc;
}

std::optional<std::string> diffuse_map(std::string_view mtl, const std::optional<std::string>& material) {
  std::string current;
  std::optional<std::string> first;
  while (!mtl.empty()) {
    auto nl = mtl.find('\n');
    std::string_view line = mtl.substr(0, nl);
    mtl.remove_prefix(nl == std::string_view::npos ? mtl.size() : nl + 1);
    std::string_view rest = line;
    auto keyword = next_token(rest);
    if (keyword == "newmtl") {
      current = std::string(trim(rest));
    } else if (keyword == "map_Kd") {
      // options such as -s are not supported; the file name is the last token
      std::string_view file = trim(rest);
      if (auto sp = file.rfind(' '); sp != std::string_view::npos) file = file.substr(sp + 1);
      if (!material || current == *material) return std::string(file);
      if (!first) first = std::string(file);
    }
  }
  return material ? std::nullopt : first;
}

TriangleMesh load_obj(const std::filesystem::path& path) {
  ObjDocument doc = parse_obj(read_text_file(path));
  if (doc.mtllib) {
    auto mtl_path = path.parent_path() / *doc.mtllib;
    if (std::filesystem::exists(mtl_path)) {
      if (auto map = diffuse_map(read_text_file(mtl_path), doc.material)) {
        auto bytes = read_file(mtl_path.parent_path() / *map);
        ingest::DecodeOptions opts;
        opts.min_short_side = 1;
        auto decoded = ingest::decode_and_validate(bytes, opts);
        doc.mesh.texture = TextureImage{std::move(decoded.rgb), std::move(bytes)};
      }
    }
  }
  doc.mesh.validate();
  return std::move(doc.mesh);
}

ObjFiles write_obj(const TriangleMesh& mesh, std::string_view stem, int jpeg_quality) {
  ObjFiles out;
  std::string& s = out.obj;
  s.reserve(mesh.positions.size() * 48 + mesh.indices.size() * 12);
  char buf[96];
  if (mesh.texture) {
    s += "mtllib " + std::string(stem) + ".mtl\nusemtl material0\n";
    out.mtl = "newmtl material0\nKd 1 1 1\nmap_Kd " + std::string(stem) + ".jpg\n";
    out.jpeg = mesh.texture->jpeg.empty() ? ingest::encode_jpeg(mesh.texture->pixels, {jpeg_quality, {}})
                                          : mesh.texture->jpeg;
  }
  for (const auto& p : mesh.positions) {
    int n = std::snprintf(buf, sizeof buf, "v %.6f %.6f %.6f\n", p.x, p.y, p.z);
    s.append(buf, static_cast<std::size_t>(n));
  }
  for (const auto& t : mesh.uvs) {
    int n = std::snprintf(buf, sizeof buf, "vt %.6f %.6f\n", t.u, t.v);
    s.append(buf, static_cast<std::size_t>(n));
  }
  const bool uv = mesh.has_uvs();
  for (std::size_t f = 0; f + 2 < mesh.indices.size(); f += 3) {
    unsigned a = mesh.indices[f] + 1, b = mesh.indices[f + 1] + 1, c = mesh.indices[f + 2] + 1;
    int n = uv ? std::snprintf(buf, sizeof buf, "f %u/%u %u/%u %u/%u\n", a, a, b, b, c, c)
               : std::snprintf(buf, sizeof buf, "f %u %u %u\n", a, b, c);
    s.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

std::filesystem::path save_obj(const TriangleMesh& mesh, const std::filesystem::path& dir, std::string_view stem) {
  std::filesystem::create_directories(dir);
  ObjFiles files = write_obj(mesh, stem);
  auto obj_path = dir / (std::string(stem) + ".obj");
  if (!files.mtl.empty()) {
    write_file_atomic(dir / (std::string(stem) + ".mtl"), std::string_view(files.mtl));
    write_file_atomic(dir / (std::string(stem) + ".jpg"), std::span<const std::uint8_t>(files.jpeg));
  }
  write_file_atomic(obj_path, std::string_view(files.obj));
  return obj_path;
}

}  // namespace tirtha::mesh
