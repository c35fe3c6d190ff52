#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "tirtha/common/id.hpp"
#include "tirtha/domain/types.hpp"

namespace tirtha::orchestrator {

namespace fs = std::filesystem;

/// File layout under storage.root:
///   images/<h0h1>/<sha256>.jpg       uploaded images, content addressed
///   uploads/                         in-flight multipart parts
///   runs/<run_id>/<NN>_<Stage>/      stage outputs
///   artifacts/<verbose_id>/run_<id>.glb
/// Archived artifacts move under archive.root with the same relative path.
class BlobStore {
 public:
  BlobStore(fs::path root, fs::path archive_root);

  const fs::path& root() const { return root_; }
  const fs::path& archive_root() const { return archive_root_; }

  /// Stores image bytes under their digest; rewriting identical bytes is a no-op.
  fs::path put_image(std::span<const std::uint8_t> bytes, std::string_view sha256);
  /// Moves an already written temp file into the image area.
  fs::path adopt_image(const fs::path& temp_file, std::string_view sha256);

  fs::path upload_dir() const;
  fs::path run_dir(RunId run) const;
  fs::path stage_dir(RunId run, std::size_t index, std::string_view stage) const;
  fs::path artifact_path(std::string_view verbose_id, RunId run) const;
  /// Where `path` (inside root) lives after archiving.
  fs::path archived_path(const fs::path& path) const;

 private:
  fs::path root_;
  fs::path archive_root_;
};

}  // namespace tirtha::orchestrator
