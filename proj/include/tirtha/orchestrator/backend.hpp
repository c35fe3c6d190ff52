#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tirtha/common/config.hpp"
#include "tirtha/orchestrator/plan.hpp"

namespace tirtha::orchestrator {

namespace fs = std::filesystem;

struct StageInput {
  const StageSpec* stage = nullptr;
  fs::path images_dir;  // the run's input images
  fs::path input_dir;   // previous stage's output (images_dir for the first stage)
  fs::path output_dir;  // empty directory owned by this stage
  std::vector<std::string> image_digests;  // sorted
  std::uint64_t seed = 0;
};

struct StageOutcome {
  nlohmann::json report = nlohmann::json::object();
};

/// Executes reconstruction stages. Implementations throw STAGE_FAILED for
/// a stage that ran and failed and TIMEOUT for one that overran its budget.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string_view kind() const = 0;
  /// Throws VALIDATION when some enabled stage cannot be executed.
  virtual void check(const StagePlan& plan) const {}
  virtual StageOutcome run_stage(const StageInput& input) = 0;
  /// Whether MeshDecimate / MeshDenoising / MeshResampling outputs already
  /// reflect those stages; otherwise post-processing applies them.
  virtual bool processes_mesh() const = 0;
};

/// The textured mesh a Texturing stage left in `dir` (first *.obj by name).
fs::path find_mesh(const fs::path& dir);

std::unique_ptr<Backend> make_backend(const Config& config);

}  // namespace tirtha::orchestrator
