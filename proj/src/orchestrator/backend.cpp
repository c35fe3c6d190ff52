#include "tirtha/orchestrator/backend.hpp"

#include <algorithm>

#include "tirtha/common/error.hpp"
#include "tirtha/orchestrator/subprocess.hpp"
#include "tirtha/orchestrator/synthetic.hpp"

namespace tirtha::orchestrator {

fs::path find_mesh(const fs::path& dir) {
  std::vector<fs::path> candidates;
  if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".obj") candidates.push_back(entry.path());
    }
  }
  if (candidates.empty()) throw Error(ErrorCode::StageFailed, "Texturing produced no .obj in " + dir.string());
  std::sort(candidates.begin(), candidates.end());
  return candidates.front();
}

std::unique_ptr<Backend> make_backend(const Config& config) {
  std::string kind = config.get_string("backend.kind", "synthetic");
  if (kind == "synthetic") {
    return std::make_unique<SyntheticBackend>(SyntheticBackend::options_from_config(config));
  }
  if (kind == "subprocess") return std::make_unique<SubprocessBackend>(SubprocessBackend::from_config(config));
  throw Error(ErrorCode::Validation, "backend.kind must be 'synthetic' or 'subprocess', not '" + kind + "'");
}

}  // namespace tirtha::orchestrator
