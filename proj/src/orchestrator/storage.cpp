#include "tirtha/orchestrator/storage.hpp"

#include <cstdio>

#include "tirtha/common/error.hpp"
#include "tirtha/common/io.hpp"

namespace tirtha::orchestrator {

BlobStore::BlobStore(fs::path root, fs::path archive_root)
    : root_(fs::absolute(root)), archive_root_(fs::absolute(archive_root)) {
  fs::create_directories(root_ / "images");
  fs::create_directories(upload_dir());
  fs::create_directories(archive_root_);
}

static fs::path image_path(const fs::path& root, std::string_view sha256) {
  if (sha256.size() < 8) throw Error(ErrorCode::Validation, "bad content digest");
  return root / "images" / std::string(sha256.substr(0, 2)) / (std::string(sha256) + ".jpg");
}

fs::path BlobStore::put_image(std::span<const std::uint8_t> bytes, std::string_view sha256) {
  fs::path path = image_path(root_, sha256);
  if (fs::exists(path)) return path;
  fs::create_directories(path.parent_path());
  write_file_atomic(path, bytes);
  return path;
}

fs::path BlobStore::adopt_image(const fs::path& temp_file, std::string_view sha256) {
  fs::path path = image_path(root_, sha256);
  fs::create_directories(path.parent_path());
  if (fs::exists(path)) {
    fs::remove(temp_file);
    return path;
  }
  fs::rename(temp_file, path);
  return path;
}

fs::path BlobStore::upload_dir() const { return root_ / "uploads"; }

fs::path BlobStore::run_dir(RunId run) const { return root_ / "runs" / run.str(); }

fs::path BlobStore::stage_dir(RunId run, std::size_t index, std::string_view stage) const {
  char prefix[8];
  std::snprintf(prefix, sizeof prefix, "%02zu_", index);
  return run_dir(run) / (prefix + std::string(stage));
}

fs::path BlobStore::artifact_path(std::string_view verbose_id, RunId run) const {
  return root_ / "artifacts" / std::string(verbose_id) / ("run_" + run.str() + ".glb");
}

fs::path BlobStore::archived_path(const fs::path& path) const {
  fs::path rel = fs::relative(path, root_);
  if (rel.empty() || *rel.begin() == "..") rel = path.filename();
  return archive_root_ / rel;
}

}  // namespace tirtha::orchestrator
