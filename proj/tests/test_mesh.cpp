#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tirtha/common/digest.hpp"
#include "tirtha/common/error.hpp"
#include "tirtha/mesh/glb.hpp"
#include "tirtha/mesh/obj.hpp"
#include "tirtha/mesh/report.hpp"
#include "tirtha/mesh/simplify.hpp"
#include "tirtha/mesh/texture.hpp"

using namespace tirtha;
using namespace tirtha::mesh;

namespace {

const char* kCube = R"(# unit cube
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 3 2
f 1 4 3
f 5 6 7
f 5 7 8
f 1 2 6
f 1 6 5
f 2 3 7
f 2 7 6
f 3 4 8
f 3 8 7
f 4 1 5
f 4 5 8
)";

ErrorCode obj_error(std::string_view text) {
  try {
    parse_obj(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "parsed";
  return ErrorCode::Integrity;
}

// Independent clustering: floor((p - min) / cell) per axis, clamped to the grid,
// degenerate and repeated (unordered) triangles dropped.
std::size_t oracle_cluster_faces(const TriangleMesh& m, double cell) {
  Bounds b = m.bounds();
  auto axis = [&](float v, float lo, float len) {
    long cells = static_cast<long>(std::floor(len / cell)) + 1;
    long i = static_cast<long>(std::floor((double(v) - lo) / cell));
    return std::clamp(i, 0L, cells - 1);
  };
  auto e = b.extent();
  std::vector<std::array<long, 3>> key(m.positions.size());
  for (std::size_t i = 0; i < m.positions.size(); ++i) {
    key[i] = {axis(m.positions[i].x, b.min.x, e.x), axis(m.positions[i].y, b.min.y, e.y),
              axis(m.positions[i].z, b.min.z, e.z)};
  }
  std::set<std::array<std::array<long, 3>, 3>> faces;
  for (std::size_t f = 0; f < m.indices.size(); f += 3) {
    std::array<std::array<long, 3>, 3> t{key[m.indices[f]], key[m.indices[f + 1]], key[m.indices[f + 2]]};
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
    std::sort(t.begin(), t.end());
    faces.insert(t);
  }
  return faces.size();
}

double mean_sq_z(const TriangleMesh& m) {
  double s = 0;
  for (const auto& p : m.positions) s += double(p.z) * p.z;
  return s / m.positions.size();
}

TriangleMesh single_triangle() {
  TriangleMesh m;
  m.positions = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  m.indices = {0, 1, 2};
  return m;
}

void expect_container_layout(const std::vector<std::uint8_t>& glb) {
  ASSERT_GE(glb.size(), 28u);
  EXPECT_EQ(std::string(glb.begin(), glb.begin() + 4), "glTF");
  EXPECT_EQ(oracle::read_u32(glb, 4), 2u);
  EXPECT_EQ(oracle::read_u32(glb, 8), glb.size());
  EXPECT_EQ(glb.size() % 4, 0u);
  std::uint32_t json_len = oracle::read_u32(glb, 12);
  EXPECT_EQ(oracle::read_u32(glb, 16), 0x4E4F534Au);
  EXPECT_EQ(json_len % 4, 0u);
  std::size_t bin_at = 20 + json_len;
  if (bin_at < glb.size()) {
    std::uint32_t bin_len = oracle::read_u32(glb, bin_at);
    EXPECT_EQ(oracle::read_u32(glb, bin_at + 4), 0x004E4942u);
    EXPECT_EQ(bin_len % 4, 0u);
    EXPECT_EQ(bin_at + 8 + bin_len, glb.size());
  }
  // JSON chunk padding is spaces
  std::size_t end = 20 + json_len;
  while (end > 20 && glb[end - 1] == ' ') --end;
  EXPECT_EQ(glb[end - 1], '}');
}

}  // namespace

TEST(Obj, UnitCube) {
  ObjDocument doc = parse_obj(kCube);
  EXPECT_EQ(doc.mesh.vertex_count(), 8u);
  EXPECT_EQ(doc.mesh.face_count(), 12u);
  EXPECT_FALSE(doc.mesh.has_uvs());
  EXPECT_NO_THROW(doc.mesh.validate());
}

TEST(Obj, QuadFanTriangulation) {
  ObjDocument doc = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
  EXPECT_EQ(doc.mesh.indices, (std::vector<std::uint32_t>{0, 1, 2, 0, 2, 3}));
}

TEST(Obj, NegativeIndices) {
  ObjDocument doc = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -1 -2 -3\n");
  EXPECT_EQ(doc.mesh.indices, (std::vector<std::uint32_t>{2, 1, 0}));
}

TEST(Obj, AllIndexFormsAndMaterials) {
  const char* text =
      "mtllib scene.mtl\nusemtl stone\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nvn 0 0 1\n"
      "f 1/1 2/2 3/3\nf 2/2/1 4//1 3/3/1\ns off\no thing\n";
  ObjDocument doc = parse_obj(text);
  EXPECT_EQ(doc.mtllib, "scene.mtl");
  EXPECT_EQ(doc.material, "stone");
  EXPECT_EQ(doc.mesh.face_count(), 2u);
  ASSERT_TRUE(doc.mesh.has_uvs());
  EXPECT_EQ(doc.mesh.uvs.size(), doc.mesh.positions.size());
  EXPECT_FLOAT_EQ(doc.mesh.uvs[1].u, 1.0f);
  EXPECT_EQ(diffuse_map("newmtl other\nmap_Kd o.jpg\nnewmtl stone\nmap_Kd s.jpg\n", std::string("stone")), "s.jpg");
  EXPECT_EQ(diffuse_map("newmtl a\nmap_Kd a.jpg\n", std::nullopt), "a.jpg");
}

TEST(Obj, SharedVertexWithTwoUvsIsSplit) {
  ObjDocument doc = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nvt 0.5 0.5\nf 1/1 2/2 3/3\nf 3/4 2/2 1/1\n");
  EXPECT_EQ(doc.mesh.vertex_count(), 4u);
  EXPECT_EQ(doc.mesh.indices[3], 3u);
}

TEST(Obj, Errors) {
  EXPECT_EQ(obj_error("v 0 0 0\nv 1 0\n"), ErrorCode::MalformedLine);
  EXPECT_EQ(obj_error("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n"), ErrorCode::IndexOutOfRange);
  EXPECT_EQ(obj_error("v 0 0 0\nf 1 -2 1\n"), ErrorCode::IndexOutOfRange);
  EXPECT_EQ(obj_error("v 0 0 0\nv 1 0 0\nf 1 2\n"), ErrorCode::MalformedLine);
  EXPECT_EQ(obj_error("v a b c\n"), ErrorCode::MalformedLine);
  try {
    parse_obj("v 0 0 0\n\n# c\nv x 0 0\n");
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("4"), std::string::npos) << e.what();
  }
}

TEST(Obj, WriteAndReloadRoundTrip) {
  fixture::TempDir dir;
  TriangleMesh m = fixture::sphere(10, 12, 32);
  auto path = save_obj(m, dir.path(), "model");
  TriangleMesh back = load_obj(path);
  ASSERT_EQ(back.vertex_count(), m.vertex_count());
  EXPECT_EQ(back.indices, m.indices);
  std::set<std::uint32_t> used(m.indices.begin(), m.indices.end());
  for (std::uint32_t i : used) {
    EXPECT_NEAR(back.positions[i].x, m.positions[i].x, 1e-6);
    EXPECT_NEAR(back.uvs[i].v, m.uvs[i].v, 1e-6);
  }
  ASSERT_TRUE(back.texture.has_value());
  EXPECT_EQ(back.texture->pixels.width, 32);
}

TEST(Decimate, FactorOneIsIdentity) {
  TriangleMesh m = fixture::sphere(20, 30);
  TriangleMesh out = decimate(m, 1.0);
  EXPECT_TRUE(same_geometry(m, out));
  EXPECT_THROW(decimate(m, 0.0), Error);
}

TEST(Decimate, GridMatchesClusteringOracle) {
  TriangleMesh g = fixture::grid(64);
  ASSERT_EQ(g.face_count(), 7938u);
  DecimateStats stats;
  TriangleMesh out = decimate(g, 0.3, &stats);
  EXPECT_LE(out.face_count(), 2381u);
  EXPECT_GE(out.face_count(), 1u);
  EXPECT_EQ(out.face_count(), oracle_cluster_faces(g, stats.cell));
  EXPECT_EQ(out.face_count(), 2312u);
  EXPECT_LE(stats.iterations, 32);
  // boundary kept within one cell of the original bounds
  Bounds a = g.bounds(), b = out.bounds();
  EXPECT_LE(std::abs(a.min.x - b.min.x), stats.cell);
  EXPECT_LE(std::abs(a.max.x - b.max.x), stats.cell);
  EXPECT_LE(std::abs(a.min.y - b.min.y), stats.cell);
  EXPECT_LE(std::abs(a.max.y - b.max.y), stats.cell);
}

TEST(Decimate, FactorSweepRespectsBudget) {
  std::vector<TriangleMesh> meshes = {fixture::grid(40), fixture::sphere(30, 40), fixture::random_mesh(3)};
  for (const auto& m : meshes) {
    for (double f = 0.1; f <= 1.0001; f += 0.1) {
      DecimateStats stats;
      TriangleMesh out = decimate(m, f, &stats);
      EXPECT_LE(out.face_count(), static_cast<std::size_t>(std::ceil(f * m.face_count()))) << f;
      EXPECT_NO_THROW(out.validate());
      if (stats.cell > 0 && out.vertex_count() > 0) {
        Bounds a = m.bounds(), b = out.bounds();
        EXPECT_TRUE(a.contains(b.min) && a.contains(b.max));
      }
    }
  }
}

TEST(Decimate, Deterministic) {
  TriangleMesh m = fixture::sphere(40, 60, 0);
  EXPECT_TRUE(same_geometry(decimate(m, 0.3), decimate(m, 0.3)));
}

TEST(Denoise, FlatGridIsAFixedPoint) {
  TriangleMesh g = fixture::grid(20);
  TriangleMesh out = denoise(g, 2.0, 1.5);
  double worst = 0;
  for (std::size_t i = 0; i < g.positions.size(); ++i) {
    worst = std::max({worst, std::abs(double(out.positions[i].x) - g.positions[i].x),
                      std::abs(double(out.positions[i].y) - g.positions[i].y),
                      std::abs(double(out.positions[i].z) - g.positions[i].z)});
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Denoise, ReducesNoiseAroundThePlane) {
  TriangleMesh g = fixture::grid(32);
  fixture::Rng rng(17);
  for (auto& p : g.positions) p.z = static_cast<float>(0.01 * rng.gaussian());
  double before = mean_sq_z(g);
  double after = mean_sq_z(denoise(g, 2.0, 1.5));
  EXPECT_LT(after, before);
}

TEST(Resample, FaceCountNearFourTimesTheDecimatedBudget) {
  TriangleMesh g = fixture::grid(64);
  TriangleMesh out = resample(g, 0.3);
  double target = 7938 * 0.3 * 4;
  EXPECT_GE(out.face_count(), 0.9 * target);
  EXPECT_LE(out.face_count(), 1.3 * target);
  EXPECT_EQ(out.face_count(), 4 * decimate(g, 0.3).face_count());
}

TEST(Texture, DownsampleExamples) {
  TextureImage big;
  big.pixels = fixture::random_raster(4096, 4096, 2);
  TextureImage half = downsample_texture(big, 2048);
  ASSERT_EQ(half.pixels.width, 2048);
  ASSERT_EQ(half.pixels.height, 2048);
  for (auto [x, y] : {std::pair{0, 0}, {17, 900}, {2047, 2047}, {1000, 3}}) {
    for (int c = 0; c < 3; ++c) {
      unsigned s = big.pixels.at(2 * x, 2 * y)[c] + big.pixels.at(2 * x + 1, 2 * y)[c] +
                   big.pixels.at(2 * x, 2 * y + 1)[c] + big.pixels.at(2 * x + 1, 2 * y + 1)[c];
      EXPECT_EQ(half.pixels.at(x, y)[c], (s + 2) / 4);
    }
  }
  TextureImage small;
  small.pixels = fixture::gray(1024, 1024, 9);
  small.jpeg = {1, 2, 3};
  TextureImage same = downsample_texture(small, 2048);
  EXPECT_EQ(same.pixels.width, 1024);
  EXPECT_EQ(same.jpeg, small.jpeg);
  TextureImage wide;
  wide.pixels = fixture::gray(4096, 1024, 9);
  TextureImage w = downsample_texture(wide, 2048);
  EXPECT_EQ(w.pixels.width, 2048);
  EXPECT_EQ(w.pixels.height, 512);
  TextureImage huge;
  huge.pixels = fixture::gray(8192, 64, 1);
  EXPECT_EQ(downsample_texture(huge, 2048).pixels.width, 2048);
}

TEST(Glb, HeaderAndSingleTriangle) {
  auto glb = write_glb(single_triangle());
  expect_container_layout(glb);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) expect_container_layout(write_glb(fixture::random_mesh(seed, seed % 2)));
  GlbContainer c = parse_glb(glb);
  EXPECT_EQ(c.version, 2u);
  EXPECT_EQ(c.json["meshes"].size(), 1u);
  EXPECT_EQ(c.json["meshes"][0]["primitives"].size(), 1u);
  GlbMesh back = read_glb(glb);
  EXPECT_EQ(back.mesh.vertex_count(), 3u);
  EXPECT_EQ(back.mesh.indices.size(), 3u);
  EXPECT_TRUE(back.quantized);
  EXPECT_FALSE(back.has_texture);
}

TEST(Glb, EmptyMeshRejected) {
  try {
    write_glb(TriangleMesh{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyMesh);
  }
}

TEST(Glb, MalformedContainers) {
  auto glb = write_glb(single_triangle());
  auto bad = glb;
  bad[0] = 'x';
  EXPECT_THROW(parse_glb(bad), Error);
  bad = glb;
  bad[8] ^= 4;
  EXPECT_THROW(parse_glb(bad), Error);
  bad = glb;
  bad.resize(bad.size() - 4);
  EXPECT_THROW(parse_glb(bad), Error);
}

TEST(Glb, QuantizedRoundTripWithinHalfStep) {
  ObjDocument doc = parse_obj(kCube);
  TriangleMesh m = fixture::sphere(30, 40);
  for (const TriangleMesh* mesh : {&doc.mesh, &m}) {
    GlbMesh back = read_glb(write_glb(*mesh));
    Bounds b = mesh->bounds();
    auto e = b.extent();
    double bound = b.diagonal() / 65536.0 / 2.0;
    ASSERT_EQ(back.mesh.vertex_count(), mesh->vertex_count());
    for (std::size_t i = 0; i < mesh->positions.size(); ++i) {
      const auto& p = mesh->positions[i];
      const auto& q = back.mesh.positions[i];
      EXPECT_LE(std::abs(double(p.x) - q.x), e.x / (2.0 * 65535.0) + 1e-6);
      EXPECT_LE(std::abs(double(p.x) - q.x), bound + 1e-6);
      EXPECT_LE(std::abs(double(p.y) - q.y), bound + 1e-6);
      EXPECT_LE(std::abs(double(p.z) - q.z), bound + 1e-6);
    }
    EXPECT_EQ(back.mesh.indices, mesh->indices);
  }
}

TEST(Glb, UnquantizedIsExact) {
  TriangleMesh m = fixture::sphere(8, 8);
  GlbMesh back = read_glb(write_glb(m, {false, 90}));
  EXPECT_FALSE(back.quantized);
  for (std::size_t i = 0; i < m.positions.size(); ++i) {
    EXPECT_EQ(back.mesh.positions[i].x, m.positions[i].x);
    EXPECT_EQ(back.mesh.positions[i].z, m.positions[i].z);
  }
}

TEST(Glb, IndexWidthFollowsVertexCount) {
  GlbContainer small = parse_glb(write_glb(fixture::grid(10)));
  TriangleMesh big = fixture::grid(300);  // 90000 vertices
  GlbContainer large = parse_glb(write_glb(big));
  auto index_type = [](const GlbContainer& c) {
    auto acc = c.json["meshes"][0]["primitives"][0]["indices"].get<int>();
    return c.json["accessors"][acc]["componentType"].get<int>();
  };
  EXPECT_EQ(index_type(small), 5123);
  EXPECT_EQ(index_type(large), 5125);
  EXPECT_EQ(read_glb(write_glb(big)).mesh.indices, big.indices);
}

TEST(Glb, TextureEmbeddedAsJpeg) {
  TriangleMesh m = fixture::sphere(6, 6, 64);
  auto glb = write_glb(m);
  GlbContainer c = parse_glb(glb);
  ASSERT_EQ(c.json["images"].size(), 1u);
  EXPECT_EQ(c.json["images"][0]["mimeType"], "image/jpeg");
  GlbMesh back = read_glb(glb);
  EXPECT_TRUE(back.has_texture);
  ASSERT_TRUE(back.mesh.texture.has_value());
  EXPECT_EQ(back.mesh.texture->pixels.width, 64);
}

TEST(Glb, GoldenBytes) {
  auto glb = write_glb(fixture::grid(8));
  auto flat = write_glb(fixture::grid(8), {false, 90});
  EXPECT_EQ(glb, write_glb(fixture::grid(8)));
  expect_container_layout(glb);
  expect_container_layout(flat);
  EXPECT_EQ(sha256_hex(glb), "3090140788fbacbab71ee63274848782908700e49a05f8ac52ed1357c5949b98");
  EXPECT_EQ(sha256_hex(flat), "30d3730eee2853a4c903248fdc0b96091e312bdc44648251025dd14a5c4c6b33");
}

TEST(Glb, QuantizedContainerSizeFollowsLayout) {
  // 10^5-vertex sphere: quantized positions take 8 bytes (u16x3 + stride pad),
  // normals 4, uvs 4; float versions take 12, 12 and 8. Indices are u32 in both.
  TriangleMesh m = fixture::sphere(249, 400);
  ASSERT_GE(m.vertex_count(), 100000u);
  auto q = write_glb(m);
  auto f = write_glb(m, {false, 90});
  std::size_t n = m.vertex_count(), idx = m.indices.size() * 4;
  std::size_t q_bin = parse_glb(q).bin.size(), f_bin = parse_glb(f).bin.size();
  EXPECT_EQ(q_bin, n * 16 + idx);
  EXPECT_EQ(f_bin, n * 32 + idx);
  double ratio = compression_ratio(f.size(), q.size());
  double layout = 1.0 - double(n * 16 + idx) / double(n * 32 + idx);
  EXPECT_NEAR(ratio, layout, 0.01);
}

TEST(Report, PublishedFigures) {
  EXPECT_NEAR(compression_ratio(261, 56), 0.785, 0.001);
  EXPECT_EQ(compression_ratio(100, 100), 0.0);
  TriangleMesh a = fixture::grid(10), b = fixture::grid(5);
  CompressionReport r = compression_report(1000, 200, a, b);
  EXPECT_DOUBLE_EQ(r.ratio, 0.8);
  EXPECT_EQ(r.vertices_before, 100u);
  EXPECT_EQ(r.faces_after, 32u);
  EXPECT_EQ(r.to_json()["ratio"], 0.8);
}

TEST(Convert, ChainAppliesOptions) {
  TriangleMesh m = fixture::sphere(60, 80, 512);
  ConvertOptions opts;
  opts.texture_side = 128;
  ConvertResult res = convert(m, 10'000'000, opts);
  GlbMesh back = read_glb(res.glb);
  EXPECT_LE(back.mesh.face_count(), static_cast<std::size_t>(std::ceil(0.3 * m.face_count())));
  ASSERT_TRUE(back.mesh.texture);
  EXPECT_LE(std::max(back.mesh.texture->pixels.width, back.mesh.texture->pixels.height), 128);
  EXPECT_EQ(res.report.output_bytes, res.glb.size());
  EXPECT_EQ(res.report.faces_after, back.mesh.face_count());
  opts.denoise = true;
  opts.resample = true;
  ConvertResult again = convert(m, 10'000'000, opts);
  EXPECT_EQ(again.glb, convert(m, 10'000'000, opts).glb);
}
