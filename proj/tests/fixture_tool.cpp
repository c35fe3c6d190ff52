// Writes test inputs for the shell-level CLI smoke test.
//   fixture_tool jpeg <out> <clean|lowdr|noisy> <w> <h> <seed>
//   fixture_tool token <secret> <email>
//   fixture_tool sphere <dir> <stem> <rings> <segments> <texture_side>
#include <chrono>
#include <iostream>
#include <string>

#include "fixtures.hpp"
#include "tirtha/api/auth.hpp"
#include "tirtha/common/io.hpp"
#include "tirtha/mesh/obj.hpp"

namespace {

int usage() {
  std::cerr << "usage: fixture_tool jpeg|token|sphere ...\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) return usage();
  std::string cmd = argv[1];
  if (cmd == "jpeg" && argc == 7) {
    std::string kind = argv[3];
    fixture::PhotoKind k = kind == "lowdr"   ? fixture::PhotoKind::LowDr
                           : kind == "noisy" ? fixture::PhotoKind::Noisy
                                             : fixture::PhotoKind::Clean;
    auto bytes = fixture::photo_jpeg(k, std::stoi(argv[4]), std::stoi(argv[5]), std::stoull(argv[6]));
    tirtha::write_file_atomic(argv[2], bytes);
    return 0;
  }
  if (cmd == "token" && argc == 4) {
    auto now = std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch());
    std::string email = argv[3];
    nlohmann::json claims = {{"sub", "sub-" + email}, {"email", email},       {"name", "Smoke"},
                             {"email_verified", true}, {"exp", now.count() + 3600}};
    std::cout << tirtha::api::sign_hs256(claims, argv[2]) << "\n";
    return 0;
  }
  if (cmd == "sphere" && argc == 7) {
    auto m = fixture::sphere(std::stoi(argv[4]), std::stoi(argv[5]), std::stoi(argv[6]));
    std::cout << tirtha::mesh::save_obj(m, argv[2], argv[3]).string() << "\n";
    return 0;
  }
  return usage();
}
